#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "otafl/fl_engine.hpp"

namespace otafl {

enum class MetricsFormat { kCsv, kJsonLines };

/// Full experiment description. dB-denominated knobs live here; everything
/// behind this boundary works in linear mW / amplitude units.
struct ExperimentConfig {
  std::string scenario = "custom";
  std::uint64_t seed = 1;
  std::size_t rounds = 100;

  Scheme scheme = Scheme::kSingleCarrier;
  bool clip_enabled = false;

  std::size_t num_ues = 8;
  double disk_radius_m = 100.0;
  double p_avg_max_dbm = 23.0;
  double p_inst_max_dbm = 26.0;
  double noise_psd_dbm_hz = -110.0;
  double bandwidth_hz = 60e3;  // per carrier
  std::size_t num_subcarriers = 32;
  int oversampling = 4;
  double oob_threshold_dbm = -10.0;
  int icf_max_iters = 16;
  double carrier_hz = kDefaultCarrierHz;
  std::size_t num_taps = 4;

  double learning_rate = 0.2;
  std::size_t batch_size = 32;

  // model / dataset
  std::size_t input_dim = 20;
  std::size_t hidden_units = 91;
  std::size_t num_classes = 2;
  std::size_t shard_size = 200;
  std::size_t test_size = 400;
  double blob_separation = 3.0;
  std::string dataset_path;  // empty: synthetic blobs
  bool label_skew = false;
};

/// One emitted row; flattened RoundMetrics keyed by (scenario, seed, round).
struct MetricsRecord {
  std::string scenario;
  std::uint64_t seed = 0;
  std::size_t round = 0;
  double papr_mean_db = 0.0;
  double papr_max_db = 0.0;
  double mse_analytic = 0.0;
  double tse = 0.0;
  double accuracy = 0.0;
  double icf_iters_mean = 0.0;
  double oob_final_dbm = 0.0;
  double papr_post_mean_db = 0.0;
  double papr_post_max_db = 0.0;
  double icf_converged_frac = 0.0;
  double residual_peak_excess_db = 0.0;
  double power_mean_mw = 0.0;
  double power_max_mw = 0.0;
};

/// Named presets. "paper-iv": the uplink settings of the reference scenario
/// (K=40, 100 m disk, 23/26 dBm, M=32, 60 kHz carriers, -10 dBm threshold,
/// 4x oversampling, 500 rounds, learning rate 1, batch 256). "desk": a small
/// configuration for quick sweeps.
ExperimentConfig preset(const std::string& name);

/// Throws std::invalid_argument naming the offending field.
void validate(const ExperimentConfig& config);

/// Overrides fields of `base` with the keys present in the JSON file at
/// `path`. Unknown keys are an error.
ExperimentConfig apply_config_file(ExperimentConfig base, const std::string& path);

/// Runs the configured training and returns one record per round.
/// Deterministic: identical (config, seed) gives identical records.
std::vector<MetricsRecord> run_experiment(const ExperimentConfig& config);

const std::vector<std::string>& metrics_columns();

/// CSV: header plus one row per record, numbers at 17 significant digits.
/// JSON lines: one object per record with the CSV columns as keys.
void emit_metrics(std::span<const MetricsRecord> records, MetricsFormat format,
                  const std::string& path);

Scheme scheme_from_string(const std::string& name);
std::string scheme_to_string(Scheme scheme);

}  // namespace otafl
