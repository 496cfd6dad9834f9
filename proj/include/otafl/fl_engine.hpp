#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "otafl/aircomp_ofdm.hpp"
#include "otafl/aircomp_single.hpp"
#include "otafl/channel.hpp"
#include "otafl/rng.hpp"

namespace otafl {

enum class Scheme { kIdeal, kSingleCarrier, kOfdm };

// Substream tags: every draw is a pure function of (seed, tag, round, ue).
namespace stream_tag {
inline constexpr std::uint64_t kModelInit = 1;
inline constexpr std::uint64_t kDataset = 2;
inline constexpr std::uint64_t kShard = 3;
inline constexpr std::uint64_t kPositions = 4;
inline constexpr std::uint64_t kChannel = 5;
inline constexpr std::uint64_t kBatch = 6;
inline constexpr std::uint64_t kNoise = 7;
}  // namespace stream_tag

struct Sample {
  std::vector<double> features;
  int label = 0;
};

struct Dataset {
  std::vector<Sample> samples;
  std::size_t size() const { return samples.size(); }
};

struct ShardedDataset {
  std::vector<Dataset> shards;  // equal sizes
  std::size_t num_shards() const { return shards.size(); }
  std::size_t shard_size() const { return shards.empty() ? 0 : shards.front().size(); }
};

/// Dense feed-forward classifier, tanh hidden activations, softmax
/// cross-entropy loss, no bias terms. Weights live in one flat vector so the
/// whole model update is a gradient-vector operation.
struct ModelSpec {
  std::vector<std::size_t> layer_sizes;  // [input, hidden..., classes]
  std::size_t num_params() const;
};

class Model {
 public:
  explicit Model(ModelSpec spec);  // zero-initialized
  static Model random_init(ModelSpec spec, Rng& rng);

  const ModelSpec& spec() const { return spec_; }
  std::size_t num_params() const { return weights_.size(); }
  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }

  double loss(std::span<const Sample> batch) const;
  GradientVector gradient(std::span<const Sample> batch) const;
  int predict(std::span<const double> features) const;
  void apply_update(const GradientVector& g, double learning_rate);  // w -= eta g

 private:
  ModelSpec spec_;
  std::vector<double> weights_;
};

/// Two-class (or more) Gaussian blobs with zero-mean class centers a fixed
/// separation apart. Labels are balanced.
Dataset make_blobs(std::size_t count, std::size_t dim, std::size_t classes,
                   double separation, Rng& rng);

/// Whitespace/comma-delimited text: feature columns then an integer label.
Dataset load_delimited_dataset(const std::string& path);

/// Shuffled split into (test, train): the first test_size samples of a
/// shuffled copy become the test set, the remainder the training pool.
std::pair<Dataset, Dataset> split_dataset(const Dataset& all, std::size_t test_size,
                                          Rng& rng);

/// Equal-size shards. iid: shuffled split. label_skew: samples sorted by
/// label before splitting, so shards see few classes each.
ShardedDataset shard_dataset(const Dataset& dataset, std::size_t num_shards,
                             Rng& rng, bool label_skew = false);

/// Mini-batch gradient of the local loss at the current global weights; one
/// gradient per round. Batch indices are drawn without replacement.
GradientVector local_gradient(const Model& model, const Dataset& shard,
                              std::size_t batch_size, Rng& rng);

/// Fraction of correct argmax predictions.
double evaluate(const Model& model, const Dataset& test_set);

/// (1/N) sum_n (recovered[n] - exact[n])^2.
double true_square_error(const GradientVector& recovered, const GradientVector& exact);

struct RoundMetrics {
  std::size_t round = 0;
  double papr_mean_db = 0.0;
  double papr_max_db = 0.0;
  double papr_post_mean_db = 0.0;
  double papr_post_max_db = 0.0;
  double mse_analytic = 0.0;
  double tse = 0.0;
  double accuracy = 0.0;
  double icf_iters_mean = 0.0;
  double icf_converged_frac = 1.0;
  double oob_final_dbm = kOobFloorDbm;
  double residual_peak_excess_db = 0.0;
  std::vector<double> tx_power_mw;  // per UE
};

struct FlConfig {
  Scheme scheme = Scheme::kIdeal;
  bool clip_enabled = false;
  double disk_radius_m = 100.0;
  double carrier_hz = kDefaultCarrierHz;
  std::size_t num_taps = 4;
  double p_avg_max_mw = 0.0;
  double p_inst_max_mw = 0.0;  // a_max^2; ignored unless clip_enabled
  double sc_noise_var = 0.0;   // per real time sample
  double subcarrier_noise_var = 0.0;
  std::size_t num_subcarriers = 32;
  int oversampling = 4;
  double oob_threshold_dbm = -10.0;
  int icf_max_iters = 16;
  double learning_rate = 1.0;
  std::size_t batch_size = 32;
  double gamma_floor = kGammaFloor;
};

/// Round loop: broadcast (implicit: one shared model), local gradients,
/// statistics exchange, power control, OTA aggregation, recovery, update.
class FlSimulation {
 public:
  FlSimulation(Model model, ShardedDataset data, Dataset test_set, FlConfig config,
               std::uint64_t seed);

  RoundMetrics run_round();
  const Model& model() const { return model_; }
  std::size_t rounds_completed() const { return round_; }

 private:
  Model model_;
  ShardedDataset data_;
  Dataset test_;
  FlConfig config_;
  std::uint64_t seed_;
  std::size_t round_ = 0;
};

}  // namespace otafl
