#include "otafl/fl_engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "otafl/units.hpp"

namespace otafl {

std::size_t ModelSpec::num_params() const {
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    total += layer_sizes[l] * layer_sizes[l + 1];
  }
  return total;
}

Model::Model(ModelSpec spec) : spec_(std::move(spec)) {
  if (spec_.layer_sizes.size() < 2) {
    throw std::invalid_argument("Model: need at least input and output layers");
  }
  for (std::size_t s : spec_.layer_sizes) {
    if (s == 0) throw std::invalid_argument("Model: zero-size layer");
  }
  weights_.assign(spec_.num_params(), 0.0);
}

Model Model::random_init(ModelSpec spec, Rng& rng) {
  Model model(std::move(spec));
  std::size_t offset = 0;
  const auto& sizes = model.spec_.layer_sizes;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    for (std::size_t i = 0; i < sizes[l] * sizes[l + 1]; ++i) {
      model.weights_[offset + i] = scale * rng.normal();
    }
    offset += sizes[l] * sizes[l + 1];
  }
  return model;
}

namespace {

// forward pass; activations[l] is the output of layer l (activations[0] = x)
void forward(const ModelSpec& spec, const std::vector<double>& weights,
             std::span<const double> x, std::vector<std::vector<double>>& activations) {
  const auto& sizes = spec.layer_sizes;
  activations.resize(sizes.size());
  activations[0].assign(x.begin(), x.end());
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::size_t in = sizes[l];
    const std::size_t out = sizes[l + 1];
    activations[l + 1].assign(out, 0.0);
    for (std::size_t r = 0; r < out; ++r) {
      double acc = 0.0;
      const double* row = weights.data() + offset + r * in;
      for (std::size_t c = 0; c < in; ++c) acc += row[c] * activations[l][c];
      activations[l + 1][r] = acc;
    }
    if (l + 2 < sizes.size()) {  // hidden layers are tanh, last layer is logits
      for (auto& v : activations[l + 1]) v = std::tanh(v);
    }
    offset += in * out;
  }
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  const double top = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (auto& v : p) {
    v = std::exp(v - top);
    total += v;
  }
  for (auto& v : p) v /= total;
  return p;
}

void check_sample(const ModelSpec& spec, const Sample& s) {
  if (s.features.size() != spec.layer_sizes.front()) {
    throw std::invalid_argument("sample feature width does not match the model");
  }
  if (s.label < 0 || static_cast<std::size_t>(s.label) >= spec.layer_sizes.back()) {
    throw std::invalid_argument("sample label out of range");
  }
}

}  // namespace

double Model::loss(std::span<const Sample> batch) const {
  if (batch.empty()) throw std::invalid_argument("loss: empty batch");
  std::vector<std::vector<double>> acts;
  double total = 0.0;
  for (const auto& s : batch) {
    check_sample(spec_, s);
    forward(spec_, weights_, s.features, acts);
    const auto p = softmax(acts.back());
    total += -std::log(std::max(p[static_cast<std::size_t>(s.label)], 1e-300));
  }
  return total / static_cast<double>(batch.size());
}

GradientVector Model::gradient(std::span<const Sample> batch) const {
  if (batch.empty()) throw std::invalid_argument("gradient: empty batch");
  const auto& sizes = spec_.layer_sizes;
  GradientVector grad;
  grad.values.assign(weights_.size(), 0.0);

  std::vector<std::vector<double>> acts;
  std::vector<double> delta, next_delta;

  // layer weight offsets
  std::vector<std::size_t> offsets(sizes.size() - 1, 0);
  for (std::size_t l = 1; l + 1 < sizes.size(); ++l) {
    offsets[l] = offsets[l - 1] + sizes[l - 1] * sizes[l];
  }

  for (const auto& s : batch) {
    check_sample(spec_, s);
    forward(spec_, weights_, s.features, acts);
    // output delta: softmax minus one-hot
    delta = softmax(acts.back());
    delta[static_cast<std::size_t>(s.label)] -= 1.0;

    for (std::size_t l = sizes.size() - 1; l-- > 0;) {
      const std::size_t in = sizes[l];
      const std::size_t out = sizes[l + 1];
      double* gw = grad.values.data() + offsets[l];
      for (std::size_t r = 0; r < out; ++r) {
        for (std::size_t c = 0; c < in; ++c) {
          gw[r * in + c] += delta[r] * acts[l][c];
        }
      }
      if (l == 0) break;
      next_delta.assign(in, 0.0);
      const double* w = weights_.data() + offsets[l];
      for (std::size_t c = 0; c < in; ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < out; ++r) acc += w[r * in + c] * delta[r];
        // back through tanh
        next_delta[c] = acc * (1.0 - acts[l][c] * acts[l][c]);
      }
      delta.swap(next_delta);
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto& v : grad.values) v *= inv;
  return grad;
}

int Model::predict(std::span<const double> features) const {
  std::vector<std::vector<double>> acts;
  forward(spec_, weights_, features, acts);
  const auto& logits = acts.back();
  return static_cast<int>(
      std::max_element(logits.begin(), logits.end()) - logits.begin());
}

void Model::apply_update(const GradientVector& g, double learning_rate) {
  if (g.size() != weights_.size()) {
    throw std::invalid_argument("apply_update: gradient size mismatch");
  }
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    weights_[i] -= learning_rate * g.values[i];
  }
}

Dataset make_blobs(std::size_t count, std::size_t dim, std::size_t classes,
                   double separation, Rng& rng) {
  if (dim == 0 || classes < 2) {
    throw std::invalid_argument("make_blobs: need dim >= 1 and classes >= 2");
  }
  // class centers: zero-mean so the bias-free model can separate them
  std::vector<std::vector<double>> centers(classes, std::vector<double>(dim, 0.0));
  if (classes == 2) {
    std::vector<double> dir(dim);
    double norm = 0.0;
    for (auto& v : dir) {
      v = rng.normal();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (std::size_t d = 0; d < dim; ++d) {
      centers[0][d] = -0.5 * separation * dir[d] / norm;
      centers[1][d] = 0.5 * separation * dir[d] / norm;
    }
  } else {
    std::vector<double> mean(dim, 0.0);
    for (auto& c : centers) {
      double norm = 0.0;
      for (auto& v : c) {
        v = rng.normal();
        norm += v * v;
      }
      norm = std::sqrt(norm);
      for (std::size_t d = 0; d < dim; ++d) {
        c[d] *= 0.5 * separation / norm;
        mean[d] += c[d] / static_cast<double>(classes);
      }
    }
    for (auto& c : centers) {
      for (std::size_t d = 0; d < dim; ++d) c[d] -= mean[d];
    }
  }

  Dataset out;
  out.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t label = i % classes;
    out.samples[i].label = static_cast<int>(label);
    out.samples[i].features.resize(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      out.samples[i].features[d] = centers[label][d] + rng.normal();
    }
  }
  return out;
}

Dataset load_delimited_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_delimited_dataset: cannot open " + path);
  }
  Dataset out;
  std::string line;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    for (auto& ch : line) {
      if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
    }
    std::istringstream row(line);
    std::vector<double> fields;
    double v = 0.0;
    while (row >> v) fields.push_back(v);
    if (fields.empty()) continue;  // blank line
    if (fields.size() < 2) {
      throw std::runtime_error("load_delimited_dataset: need features + label in " + path);
    }
    if (width == 0) {
      width = fields.size();
    } else if (fields.size() != width) {
      throw std::runtime_error("load_delimited_dataset: ragged rows in " + path);
    }
    Sample s;
    s.features.assign(fields.begin(), fields.end() - 1);
    s.label = static_cast<int>(std::lround(fields.back()));
    out.samples.push_back(std::move(s));
  }
  if (out.samples.empty()) {
    throw std::runtime_error("load_delimited_dataset: no samples in " + path);
  }
  return out;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& all, std::size_t test_size,
                                          Rng& rng) {
  if (test_size >= all.size()) {
    throw std::invalid_argument("split_dataset: test_size must leave training samples");
  }
  std::vector<std::size_t> idx(all.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = idx.size(); i-- > 1;) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform() * double(i + 1));
    std::swap(idx[i], idx[std::min(j, i)]);
  }
  Dataset test, train;
  test.samples.reserve(test_size);
  train.samples.reserve(all.size() - test_size);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    (i < test_size ? test : train).samples.push_back(all.samples[idx[i]]);
  }
  return {std::move(test), std::move(train)};
}

ShardedDataset shard_dataset(const Dataset& dataset, std::size_t num_shards,
                             Rng& rng, bool label_skew) {
  if (num_shards == 0 || dataset.size() < num_shards) {
    throw std::invalid_argument("shard_dataset: need at least one sample per shard");
  }
  std::vector<std::size_t> idx(dataset.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Fisher-Yates with our own stream for cross-platform determinism
  for (std::size_t i = idx.size(); i-- > 1;) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform() * double(i + 1));
    std::swap(idx[i], idx[std::min(j, i)]);
  }
  if (label_skew) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return dataset.samples[a].label < dataset.samples[b].label;
    });
  }
  const std::size_t per_shard = dataset.size() / num_shards;  // extras dropped
  ShardedDataset out;
  out.shards.resize(num_shards);
  for (std::size_t s = 0; s < num_shards; ++s) {
    out.shards[s].samples.reserve(per_shard);
    for (std::size_t i = 0; i < per_shard; ++i) {
      out.shards[s].samples.push_back(dataset.samples[idx[s * per_shard + i]]);
    }
  }
  return out;
}

GradientVector local_gradient(const Model& model, const Dataset& shard,
                              std::size_t batch_size, Rng& rng) {
  if (shard.size() == 0) {
    throw std::invalid_argument("local_gradient: empty shard");
  }
  if (batch_size == 0 || batch_size > shard.size()) {
    throw std::invalid_argument("local_gradient: batch_size must be in [1, shard size]");
  }
  // partial Fisher-Yates: first batch_size entries are a uniform sample
  std::vector<std::size_t> idx(shard.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<Sample> batch;
  batch.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    const std::size_t span = shard.size() - i;
    const std::size_t j = i + std::min(static_cast<std::size_t>(rng.uniform() * double(span)),
                                       span - 1);
    std::swap(idx[i], idx[j]);
    batch.push_back(shard.samples[idx[i]]);
  }
  return model.gradient(batch);
}

double evaluate(const Model& model, const Dataset& test_set) {
  if (test_set.size() == 0) {
    throw std::invalid_argument("evaluate: empty test set");
  }
  std::size_t correct = 0;
  for (const auto& s : test_set.samples) {
    if (model.predict(s.features) == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test_set.size());
}

double true_square_error(const GradientVector& recovered, const GradientVector& exact) {
  if (recovered.size() != exact.size()) {
    throw std::invalid_argument("true_square_error: length mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < recovered.size(); ++i) {
    const double d = recovered.values[i] - exact.values[i];
    sum += d * d;
  }
  return sum / static_cast<double>(recovered.size());
}

FlSimulation::FlSimulation(Model model, ShardedDataset data, Dataset test_set,
                           FlConfig config, std::uint64_t seed)
    : model_(std::move(model)),
      data_(std::move(data)),
      test_(std::move(test_set)),
      config_(config),
      seed_(seed) {
  if (data_.num_shards() == 0) {
    throw std::invalid_argument("FlSimulation: no shards");
  }
  if (config_.batch_size > data_.shard_size()) {
    throw std::invalid_argument("FlSimulation: batch_size exceeds shard size");
  }
}

RoundMetrics FlSimulation::run_round() {
  const std::size_t t = round_;
  const std::size_t num_ues = data_.num_shards();

  // step 2: one mini-batch gradient per UE at the broadcast weights
  std::vector<GradientVector> raw(num_ues);
  for (std::size_t k = 0; k < num_ues; ++k) {
    Rng batch_rng = Rng::stream(seed_, stream_tag::kBatch, t, k);
    raw[k] = local_gradient(model_, data_.shards[k], config_.batch_size, batch_rng);
  }

  GradientVector exact_mean;
  exact_mean.values.assign(model_.num_params(), 0.0);
  for (const auto& g : raw) {
    for (std::size_t i = 0; i < g.size(); ++i) exact_mean.values[i] += g.values[i];
  }
  for (auto& v : exact_mean.values) v /= static_cast<double>(num_ues);

  RoundMetrics metrics;
  metrics.round = t;
  GradientVector aggregated;

  if (config_.scheme == Scheme::kIdeal) {
    aggregated = exact_mean;
    metrics.tx_power_mw.assign(num_ues, 0.0);
    // waveform statistics of what the UEs would have sent
    const NormalizationStats stats = compute_norm_stats(raw, config_.gamma_floor);
    double sum_db = 0.0, max_db = 0.0;
    for (std::size_t k = 0; k < num_ues; ++k) {
      const GradientVector g = normalize(raw[k], stats);
      double db = 0.0;
      for (double v : g.values) {
        if (v != 0.0) {
          db = to_db(papr_gradient(g));
          break;
        }
      }
      sum_db += db;
      max_db = k == 0 ? db : std::max(max_db, db);
    }
    metrics.papr_mean_db = sum_db / static_cast<double>(num_ues);
    metrics.papr_max_db = max_db;
    metrics.papr_post_mean_db = metrics.papr_mean_db;
    metrics.papr_post_max_db = metrics.papr_max_db;
  } else {
    Rng pos_rng = Rng::stream(seed_, stream_tag::kPositions, t);
    const auto positions = place_ues(num_ues, config_.disk_radius_m, pos_rng);
    Rng noise_rng = Rng::stream(seed_, stream_tag::kNoise, t);
    const ClipLevel level = config_.clip_enabled
                                ? ClipLevel(std::sqrt(config_.p_inst_max_mw))
                                : ClipLevel::unbounded();

    if (config_.scheme == Scheme::kSingleCarrier) {
      std::vector<double> gains(num_ues);
      for (std::size_t k = 0; k < num_ues; ++k) {
        Rng chan_rng = Rng::stream(seed_, stream_tag::kChannel, t, k);
        gains[k] = draw_flat_channel(positions[k], config_.carrier_hz, chan_rng);
      }
      const SingleCarrierRound round = run_single_carrier_round(
          raw, ChannelGains(gains), config_.p_avg_max_mw, config_.sc_noise_var,
          level, noise_rng, config_.gamma_floor);
      aggregated = round.recovered;
      metrics.papr_mean_db = round.papr_mean_db;
      metrics.papr_max_db = round.papr_max_db;
      metrics.papr_post_mean_db = round.papr_post_mean_db;
      metrics.papr_post_max_db = round.papr_post_max_db;
      metrics.mse_analytic = round.analytic_mse;
      metrics.tx_power_mw = round.power.powers_mw;
    } else {
      std::vector<ChannelRealization> channels(num_ues);
      for (std::size_t k = 0; k < num_ues; ++k) {
        Rng chan_rng = Rng::stream(seed_, stream_tag::kChannel, t, k);
        channels[k] = draw_multipath(positions[k], config_.carrier_hz,
                                     config_.num_taps, config_.num_subcarriers,
                                     chan_rng);
      }
      IcfConfig icf_cfg;
      icf_cfg.level = level;
      icf_cfg.oob_threshold_dbm = config_.oob_threshold_dbm;
      icf_cfg.max_iters = config_.icf_max_iters;
      icf_cfg.oversampling = config_.oversampling;
      const OfdmRound round = run_ofdm_round(
          raw, channels, config_.num_subcarriers, config_.p_avg_max_mw,
          config_.subcarrier_noise_var, icf_cfg, config_.clip_enabled, noise_rng,
          config_.gamma_floor);
      aggregated = round.recovered;
      metrics.papr_mean_db = round.papr_mean_db;
      metrics.papr_max_db = round.papr_max_db;
      metrics.papr_post_mean_db = round.papr_post_mean_db;
      metrics.papr_post_max_db = round.papr_post_max_db;
      metrics.mse_analytic = round.analytic_mse;
      metrics.icf_iters_mean = round.icf_iters_mean;
      metrics.icf_converged_frac = round.icf_converged_frac;
      metrics.oob_final_dbm = round.oob_final_dbm;
      metrics.residual_peak_excess_db = round.residual_peak_excess_db;
      metrics.tx_power_mw = round.powers_mw;
    }
  }

  metrics.tse = true_square_error(aggregated, exact_mean);

  // step 5: global update with the recovered average
  model_.apply_update(aggregated, config_.learning_rate);
  metrics.accuracy = evaluate(model_, test_);

  ++round_;
  return metrics;
}

}  // namespace otafl
