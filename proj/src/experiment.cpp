#include "otafl/experiment.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "otafl/units.hpp"

namespace otafl {

Scheme scheme_from_string(const std::string& name) {
  if (name == "ideal") return Scheme::kIdeal;
  if (name == "sc") return Scheme::kSingleCarrier;
  if (name == "ofdm") return Scheme::kOfdm;
  throw std::invalid_argument("scheme must be one of ideal|sc|ofdm, got '" + name + "'");
}

std::string scheme_to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::kIdeal: return "ideal";
    case Scheme::kSingleCarrier: return "sc";
    case Scheme::kOfdm: return "ofdm";
  }
  return "?";
}

ExperimentConfig preset(const std::string& name) {
  if (name == "paper-iv") {
    ExperimentConfig cfg;
    cfg.scenario = "paper-iv";
    cfg.rounds = 500;
    cfg.num_ues = 40;
    cfg.disk_radius_m = 100.0;
    cfg.p_avg_max_dbm = 23.0;
    cfg.p_inst_max_dbm = 26.0;
    cfg.noise_psd_dbm_hz = -110.0;
    cfg.bandwidth_hz = 60e3;
    cfg.num_subcarriers = 32;
    cfg.oversampling = 4;
    cfg.oob_threshold_dbm = -10.0;
    cfg.learning_rate = 1.0;
    cfg.batch_size = 256;
    cfg.shard_size = 512;
    cfg.test_size = 1000;
    return cfg;
  }
  if (name == "desk") {
    ExperimentConfig cfg;
    cfg.scenario = "desk";
    cfg.rounds = 100;
    cfg.num_ues = 8;
    cfg.batch_size = 32;
    cfg.shard_size = 200;
    cfg.test_size = 400;
    cfg.learning_rate = 0.2;
    cfg.noise_psd_dbm_hz = -110.0;
    return cfg;
  }
  throw std::invalid_argument("unknown preset '" + name + "' (try paper-iv or desk)");
}

void validate(const ExperimentConfig& config) {
  const auto fail = [](const std::string& what) {
    throw std::invalid_argument("config: " + what);
  };
  if (config.num_ues < 1) fail("num_ues must be >= 1");
  if (!(config.disk_radius_m > 0)) fail("disk_radius_m must be positive");
  if (!std::isfinite(config.p_avg_max_dbm)) fail("p_avg_max_dbm must be finite");
  if (!std::isfinite(config.p_inst_max_dbm)) fail("p_inst_max_dbm must be finite");
  if (!std::isfinite(config.noise_psd_dbm_hz)) fail("noise_psd_dbm_hz must be finite");
  if (!std::isfinite(config.oob_threshold_dbm)) fail("oob_threshold_dbm must be finite");
  if (!(config.bandwidth_hz > 0)) fail("bandwidth_hz must be positive");
  if (config.num_subcarriers < 1) fail("num_subcarriers must be >= 1");
  if (config.oversampling < 1) fail("oversampling must be >= 1");
  if (config.icf_max_iters < 1) fail("icf_max_iters must be >= 1");
  if (!(config.carrier_hz > 0)) fail("carrier_hz must be positive");
  if (config.num_taps < 1 || config.num_taps > config.num_subcarriers) {
    fail("num_taps must be in [1, num_subcarriers]");
  }
  if (!(config.learning_rate > 0)) fail("learning_rate must be positive");
  if (config.batch_size < 1) fail("batch_size must be >= 1");
  // with a file-backed dataset the actual shard size is derived after loading
  if (config.dataset_path.empty() && config.batch_size > config.shard_size) {
    fail("batch_size exceeds shard_size");
  }
  if (config.input_dim < 1) fail("input_dim must be >= 1");
  if (config.hidden_units < 1) fail("hidden_units must be >= 1");
  if (config.num_classes < 2) fail("num_classes must be >= 2");
  if (config.shard_size < 1) fail("shard_size must be >= 1");
  if (config.test_size < 1) fail("test_size must be >= 1");
  if (!(config.blob_separation > 0)) fail("blob_separation must be positive");
  if (config.p_inst_max_dbm < config.p_avg_max_dbm) {
    std::cerr << "warning: p_inst_max_dbm (" << config.p_inst_max_dbm
              << ") below p_avg_max_dbm (" << config.p_avg_max_dbm
              << "); headroom is negative\n";
  }
}

namespace {

FlConfig to_fl_config(const ExperimentConfig& cfg) {
  FlConfig fl;
  fl.scheme = cfg.scheme;
  fl.clip_enabled = cfg.clip_enabled;
  fl.disk_radius_m = cfg.disk_radius_m;
  fl.carrier_hz = cfg.carrier_hz;
  fl.num_taps = cfg.num_taps;
  fl.p_avg_max_mw = dbm_to_mw(cfg.p_avg_max_dbm);
  fl.p_inst_max_mw = dbm_to_mw(cfg.p_inst_max_dbm);
  const double psd_mw_hz = dbm_to_mw(cfg.noise_psd_dbm_hz);
  fl.sc_noise_var = psd_mw_hz * cfg.bandwidth_hz;
  fl.subcarrier_noise_var = psd_mw_hz * cfg.bandwidth_hz;
  fl.num_subcarriers = cfg.num_subcarriers;
  fl.oversampling = cfg.oversampling;
  fl.oob_threshold_dbm = cfg.oob_threshold_dbm;
  fl.icf_max_iters = cfg.icf_max_iters;
  fl.learning_rate = cfg.learning_rate;
  fl.batch_size = cfg.batch_size;
  return fl;
}

}  // namespace

std::vector<MetricsRecord> run_experiment(const ExperimentConfig& config) {
  validate(config);

  Dataset all;
  if (config.dataset_path.empty()) {
    Rng data_rng = Rng::stream(config.seed, stream_tag::kDataset);
    all = make_blobs(config.num_ues * config.shard_size + config.test_size,
                     config.input_dim, config.num_classes, config.blob_separation,
                     data_rng);
  } else {
    all = load_delimited_dataset(config.dataset_path);
    if (all.size() < config.test_size + config.num_ues) {
      throw std::invalid_argument("config: dataset_path file too small for test_size");
    }
  }
  Rng split_rng = Rng::stream(config.seed, stream_tag::kShard, 1);
  auto [test, train] = split_dataset(all, config.test_size, split_rng);

  Rng shard_rng = Rng::stream(config.seed, stream_tag::kShard);
  ShardedDataset shards =
      shard_dataset(train, config.num_ues, shard_rng, config.label_skew);
  if (shards.shard_size() < config.batch_size) {
    throw std::invalid_argument("config: batch_size exceeds the resulting shard size");
  }

  ModelSpec spec;
  spec.layer_sizes = {config.input_dim, config.hidden_units, config.num_classes};
  Rng init_rng = Rng::stream(config.seed, stream_tag::kModelInit);
  Model model = Model::random_init(spec, init_rng);

  FlSimulation sim(std::move(model), std::move(shards), std::move(test),
                   to_fl_config(config), config.seed);

  std::vector<MetricsRecord> records;
  records.reserve(config.rounds);
  for (std::size_t t = 0; t < config.rounds; ++t) {
    const RoundMetrics m = sim.run_round();
    MetricsRecord rec;
    rec.scenario = config.scenario;
    rec.seed = config.seed;
    rec.round = m.round;
    rec.papr_mean_db = m.papr_mean_db;
    rec.papr_max_db = m.papr_max_db;
    rec.mse_analytic = m.mse_analytic;
    rec.tse = m.tse;
    rec.accuracy = m.accuracy;
    rec.icf_iters_mean = m.icf_iters_mean;
    rec.oob_final_dbm = m.oob_final_dbm;
    rec.papr_post_mean_db = m.papr_post_mean_db;
    rec.papr_post_max_db = m.papr_post_max_db;
    rec.icf_converged_frac = m.icf_converged_frac;
    rec.residual_peak_excess_db = m.residual_peak_excess_db;
    if (!m.tx_power_mw.empty()) {
      double sum = 0.0, peak = 0.0;
      for (double p : m.tx_power_mw) {
        sum += p;
        peak = std::max(peak, p);
      }
      rec.power_mean_mw = sum / static_cast<double>(m.tx_power_mw.size());
      rec.power_max_mw = peak;
    }
    records.push_back(std::move(rec));
  }
  return records;
}

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> columns = {
      "scenario",           "seed",
      "round",              "papr_mean_db",
      "papr_max_db",        "mse_analytic",
      "tse",                "accuracy",
      "icf_iters_mean",     "oob_final_dbm",
      "papr_post_mean_db",  "papr_post_max_db",
      "icf_converged_frac", "residual_peak_excess_db",
      "power_mean_mw",      "power_max_mw"};
  return columns;
}

namespace {

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<double> numeric_fields(const MetricsRecord& r) {
  return {r.papr_mean_db,        r.papr_max_db,
          r.mse_analytic,        r.tse,
          r.accuracy,            r.icf_iters_mean,
          r.oob_final_dbm,       r.papr_post_mean_db,
          r.papr_post_max_db,    r.icf_converged_frac,
          r.residual_peak_excess_db, r.power_mean_mw,
          r.power_max_mw};
}

}  // namespace

void emit_metrics(std::span<const MetricsRecord> records, MetricsFormat format,
                  const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("emit_metrics: cannot open " + path + " for writing");
  }
  const auto& columns = metrics_columns();
  if (format == MetricsFormat::kCsv) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      out << (c ? "," : "") << columns[c];
    }
    out << "\n";
    for (const auto& r : records) {
      out << r.scenario << "," << r.seed << "," << r.round;
      for (double v : numeric_fields(r)) out << "," << format_g17(v);
      out << "\n";
    }
  } else {
    for (const auto& r : records) {
      out << "{\"scenario\":\"" << r.scenario << "\",\"seed\":" << r.seed
          << ",\"round\":" << r.round;
      const auto values = numeric_fields(r);
      for (std::size_t c = 3; c < columns.size(); ++c) {
        out << ",\"" << columns[c] << "\":" << format_g17(values[c - 3]);
      }
      out << "}\n";
    }
  }
  if (!out) {
    throw std::runtime_error("emit_metrics: write failed for " + path);
  }
}

ExperimentConfig apply_config_file(ExperimentConfig base, const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("config file: cannot open " + path);
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config file " + path + ": " + e.what());
  }
  if (!doc.is_object()) {
    throw std::runtime_error("config file " + path + ": expected a JSON object");
  }
  for (const auto& [key, value] : doc.items()) {
    if (key == "scenario") base.scenario = value.get<std::string>();
    else if (key == "seed") base.seed = value.get<std::uint64_t>();
    else if (key == "rounds") base.rounds = value.get<std::size_t>();
    else if (key == "scheme") base.scheme = scheme_from_string(value.get<std::string>());
    else if (key == "clip") base.clip_enabled = value.get<bool>();
    else if (key == "num_ues") base.num_ues = value.get<std::size_t>();
    else if (key == "disk_radius_m") base.disk_radius_m = value.get<double>();
    else if (key == "p_avg_max_dbm") base.p_avg_max_dbm = value.get<double>();
    else if (key == "p_inst_max_dbm") base.p_inst_max_dbm = value.get<double>();
    else if (key == "noise_psd_dbm_hz") base.noise_psd_dbm_hz = value.get<double>();
    else if (key == "bandwidth_hz") base.bandwidth_hz = value.get<double>();
    else if (key == "num_subcarriers") base.num_subcarriers = value.get<std::size_t>();
    else if (key == "oversampling") base.oversampling = value.get<int>();
    else if (key == "oob_threshold_dbm") base.oob_threshold_dbm = value.get<double>();
    else if (key == "icf_max_iters") base.icf_max_iters = value.get<int>();
    else if (key == "carrier_hz") base.carrier_hz = value.get<double>();
    else if (key == "num_taps") base.num_taps = value.get<std::size_t>();
    else if (key == "learning_rate") base.learning_rate = value.get<double>();
    else if (key == "batch_size") base.batch_size = value.get<std::size_t>();
    else if (key == "input_dim") base.input_dim = value.get<std::size_t>();
    else if (key == "hidden_units") base.hidden_units = value.get<std::size_t>();
    else if (key == "num_classes") base.num_classes = value.get<std::size_t>();
    else if (key == "shard_size") base.shard_size = value.get<std::size_t>();
    else if (key == "test_size") base.test_size = value.get<std::size_t>();
    else if (key == "blob_separation") base.blob_separation = value.get<double>();
    else if (key == "dataset_path") base.dataset_path = value.get<std::string>();
    else if (key == "label_skew") base.label_skew = value.get<bool>();
    else throw std::runtime_error("config file " + path + ": unknown key '" + key + "'");
  }
  return base;
}

}  // namespace otafl
