#include "otafl/aircomp_single.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "otafl/units.hpp"

namespace otafl {

NormalizationStats compute_norm_stats(std::span<const GradientVector> raw,
                                      double gamma_floor) {
  if (raw.empty()) {
    throw std::invalid_argument("compute_norm_stats: no gradients");
  }
  const std::size_t n = raw.front().size();
  if (n == 0) {
    throw std::invalid_argument("compute_norm_stats: empty gradient vector");
  }
  double mu_sum = 0.0;
  double gamma_sum = 0.0;
  for (const auto& g : raw) {
    if (g.size() != n) {
      throw std::invalid_argument("compute_norm_stats: inconsistent lengths");
    }
    double mean = 0.0;
    double mean_sq = 0.0;
    for (double v : g.values) {
      mean += v;
      mean_sq += v * v;
    }
    mean /= static_cast<double>(n);
    mean_sq /= static_cast<double>(n);
    mu_sum += mean;
    gamma_sum += std::sqrt(std::max(mean_sq - mean * mean, 0.0));
  }
  NormalizationStats stats;
  stats.mu = mu_sum / static_cast<double>(raw.size());
  stats.gamma = std::max(gamma_sum / static_cast<double>(raw.size()), gamma_floor);
  return stats;
}

GradientVector normalize(const GradientVector& raw, const NormalizationStats& stats) {
  GradientVector out;
  out.values.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out.values[i] = (raw.values[i] - stats.mu) / stats.gamma;
  }
  out.normalized = true;
  return out;
}

GradientVector denormalize(const GradientVector& g, const NormalizationStats& stats) {
  GradientVector out;
  out.values.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.values[i] = g.values[i] * stats.gamma + stats.mu;
  }
  out.normalized = false;
  return out;
}

TimeSignal transmit_clipped(const GradientVector& g, double power_mw, ClipLevel level) {
  if (power_mw < 0.0) {
    throw std::invalid_argument("transmit_clipped: negative power");
  }
  const double amp = std::sqrt(power_mw);
  TimeSignal x;
  x.samples.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    x.samples[i] = cplx(amp * g.values[i], 0.0);
  }
  return clip_amplitude(x, level);
}

TimeSignal superpose_receive(std::span<const TimeSignal> signals,
                             const ChannelGains& gains, double noise_var, Rng& rng) {
  if (signals.empty() || signals.size() != gains.count()) {
    throw std::invalid_argument("superpose_receive: signals/gains size mismatch");
  }
  const std::size_t n = signals.front().size();
  for (const auto& s : signals) {
    if (s.size() != n) {
      throw std::invalid_argument("superpose_receive: signal length mismatch");
    }
  }
  const double noise_amp = std::sqrt(noise_var);
  TimeSignal y;
  y.samples.assign(n, cplx(0.0, 0.0));
  for (std::size_t k = 0; k < signals.size(); ++k) {
    const double h = gains.linear()[k];
    for (std::size_t i = 0; i < n; ++i) {
      y.samples[i] += h * signals[k].samples[i];
    }
  }
  if (noise_var > 0.0) {
    for (auto& s : y.samples) s += noise_amp * rng.normal();
  }
  return y;
}

GradientVector recover(const TimeSignal& y, double alpha, std::size_t num_ues,
                       const NormalizationStats& stats) {
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("recover: alpha must be positive");
  }
  if (num_ues == 0) {
    throw std::invalid_argument("recover: num_ues must be positive");
  }
  const double scale = stats.gamma * std::sqrt(alpha) / static_cast<double>(num_ues);
  GradientVector out;
  out.values.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    out.values[i] = scale * y.samples[i].real() + stats.mu;
  }
  return out;
}

double analytic_mse_single_carrier(const PowerSolution& sol, const ChannelGains& gains,
                                   double noise_var, const NormalizationStats& stats,
                                   std::size_t vector_len, std::size_t num_ues) {
  const double bracket = mse_objective(sol.alpha, sol.powers_mw, gains, noise_var);
  const double k = static_cast<double>(num_ues);
  return stats.gamma * stats.gamma * static_cast<double>(vector_len) / (k * k) * bracket;
}

double papr_gradient(const GradientVector& g) {
  double peak = 0.0;
  double sum = 0.0;
  for (double v : g.values) {
    peak = std::max(peak, v * v);
    sum += v * v;
  }
  if (peak == 0.0) {
    throw std::domain_error("papr_gradient: undefined for an all-zero vector");
  }
  return peak / (sum / static_cast<double>(g.size()));
}

namespace {

// metrics-level guard: degenerate all-zero waveforms report 0 dB
double papr_db_or_zero(const TimeSignal& s) {
  for (const auto& v : s.samples) {
    if (std::norm(v) > 0.0) return to_db(papr(s));
  }
  return 0.0;
}

}  // namespace

SingleCarrierRound run_single_carrier_round(std::span<const GradientVector> raw_gradients,
                                            const ChannelGains& gains, double p_max_mw,
                                            double noise_var, ClipLevel level,
                                            Rng& noise_rng, double gamma_floor) {
  const std::size_t num_ues = raw_gradients.size();
  if (num_ues != gains.count()) {
    throw std::invalid_argument("run_single_carrier_round: gradients/gains mismatch");
  }
  const NormalizationStats stats = compute_norm_stats(raw_gradients, gamma_floor);
  const PowerSolution sol = solve_power_alloc(gains, p_max_mw, noise_var);

  SingleCarrierRound round;
  round.power = sol;

  std::vector<TimeSignal> transmitted;
  transmitted.reserve(num_ues);
  double pre_sum = 0.0, pre_max = 0.0, post_sum = 0.0, post_max = 0.0;
  bool any_pre = false;
  for (std::size_t k = 0; k < num_ues; ++k) {
    const GradientVector g = normalize(raw_gradients[k], stats);

    TimeSignal unclipped = transmit_clipped(g, sol.powers_mw[k], ClipLevel::unbounded());
    const double pre_db = papr_db_or_zero(unclipped);
    pre_sum += pre_db;
    pre_max = any_pre ? std::max(pre_max, pre_db) : pre_db;
    any_pre = true;

    TimeSignal x = level.enabled() ? clip_amplitude(unclipped, level)
                                   : std::move(unclipped);
    const double post_db = papr_db_or_zero(x);
    post_sum += post_db;
    post_max = std::max(post_max, post_db);
    transmitted.push_back(std::move(x));
  }
  round.papr_mean_db = pre_sum / static_cast<double>(num_ues);
  round.papr_max_db = pre_max;
  round.papr_post_mean_db = post_sum / static_cast<double>(num_ues);
  round.papr_post_max_db = post_max;

  const TimeSignal y = superpose_receive(transmitted, gains, noise_var, noise_rng);
  round.recovered = recover(y, sol.alpha, num_ues, stats);
  // reported per entry so it is directly comparable with the true squared error
  round.analytic_mse =
      analytic_mse_single_carrier(sol, gains, noise_var, stats,
                                  raw_gradients.front().size(), num_ues) /
      static_cast<double>(raw_gradients.front().size());
  return round;
}

}  // namespace otafl
