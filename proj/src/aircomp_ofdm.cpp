#include "otafl/aircomp_ofdm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "otafl/units.hpp"

namespace otafl {

OfdmSymbolPlan::OfdmSymbolPlan(std::size_t n, std::size_t m)
    : gradient_len(n), num_subcarriers(m) {
  if (n == 0 || m == 0) {
    throw std::invalid_argument("OfdmSymbolPlan: N and M must be positive");
  }
}

std::size_t OfdmSymbolPlan::num_symbols() const {
  return (gradient_len + num_subcarriers - 1) / num_subcarriers;
}

std::size_t OfdmSymbolPlan::entry_index(std::size_t symbol, std::size_t subcarrier) const {
  return symbol * num_subcarriers + subcarrier;
}

std::vector<double> OfdmSymbolPlan::slice(std::span<const double> values,
                                          std::size_t symbol) const {
  std::vector<double> out(num_subcarriers, 0.0);
  for (std::size_t m = 0; m < num_subcarriers; ++m) {
    const std::size_t n = entry_index(symbol, m);
    if (n < values.size()) out[m] = values[n];
  }
  return out;
}

TimeSignal modulate_symbol(std::span<const double> slice,
                           std::span<const cplx> precoders, int oversampling) {
  if (slice.empty() || slice.size() != precoders.size()) {
    throw std::invalid_argument("modulate_symbol: slice/precoder size mismatch");
  }
  Spectrum symbol;
  symbol.bins.resize(slice.size());
  for (std::size_t m = 0; m < slice.size(); ++m) {
    symbol.bins[m] = slice[m] * precoders[m];
  }
  return idft(oversample_pad(symbol, oversampling), oversampling);
}

namespace {

bool all_zero(const TimeSignal& s) {
  for (const auto& v : s.samples) {
    if (std::norm(v) > 0.0) return false;
  }
  return true;
}

double papr_db_or_zero(const TimeSignal& s) {
  return all_zero(s) ? 0.0 : to_db(papr(s));
}

}  // namespace

std::pair<TimeSignal, IcfReport> icf(const TimeSignal& signal, const IcfConfig& cfg) {
  if (cfg.max_iters < 1 || cfg.oversampling < 1) {
    throw std::invalid_argument("icf: max_iters and oversampling must be >= 1");
  }
  if (signal.oversampling_factor != cfg.oversampling) {
    throw std::invalid_argument("icf: signal oversampling does not match the config");
  }
  const std::size_t in_band =
      signal.size() / static_cast<std::size_t>(cfg.oversampling);
  if (in_band == 0 || in_band * static_cast<std::size_t>(cfg.oversampling) !=
                          signal.size()) {
    throw std::invalid_argument("icf: signal length not a multiple of oversampling");
  }

  IcfReport report;
  report.papr_before_db = papr_db_or_zero(signal);

  TimeSignal current = signal;
  for (int j = 1; j <= cfg.max_iters; ++j) {
    const TimeSignal clipped = clip_amplitude(current, cfg.level);
    const Spectrum clipped_spectrum = dft(clipped);
    const double oob = oob_power_dbm(clipped_spectrum, in_band);
    if (j == 1) report.first_oob_dbm = oob;
    report.final_oob_dbm = oob;
    report.iterations_used = j;

    current = idft(rect_filter(clipped_spectrum, in_band), cfg.oversampling);
    if (oob <= cfg.oob_threshold_dbm) {
      report.converged = true;
      break;
    }
  }

  report.papr_after_db = papr_db_or_zero(current);
  const double a = cfg.level.a_max();
  double peak2 = 0.0;
  for (const auto& s : current.samples) peak2 = std::max(peak2, std::norm(s));
  if (std::isfinite(a) && peak2 > a * a && a > 0.0) {
    report.residual_peak_excess_db = to_db(peak2 / (a * a));
  }
  return {std::move(current), report};
}

TimeSignal nyquist_signal(std::span<const cplx> in_band_bins) {
  Spectrum s;
  s.bins.assign(in_band_bins.begin(), in_band_bins.end());
  return idft(s, 1);
}

TimeSignal transmit_through_channel(std::span<const TimeSignal> signals,
                                    std::span<const ChannelRealization> channels,
                                    double subcarrier_noise_var, Rng& rng) {
  if (signals.empty() || signals.size() != channels.size()) {
    throw std::invalid_argument("transmit_through_channel: signals/channels mismatch");
  }
  const std::size_t n = signals.front().size();
  for (const auto& s : signals) {
    if (s.size() != n) {
      throw std::invalid_argument("transmit_through_channel: length mismatch");
    }
  }
  TimeSignal y;
  y.samples.assign(n, cplx(0.0, 0.0));
  for (std::size_t k = 0; k < signals.size(); ++k) {
    const TimeSignal faded = circ_conv(signals[k], channels[k].taps);
    for (std::size_t i = 0; i < n; ++i) y.samples[i] += faded.samples[i];
  }
  if (subcarrier_noise_var > 0.0) {
    // time-domain noise variance sigma^2 * M, split evenly over re/im
    const double component_sd =
        std::sqrt(subcarrier_noise_var * static_cast<double>(n) / 2.0);
    for (auto& s : y.samples) {
      s += cplx(component_sd * rng.normal(), component_sd * rng.normal());
    }
  }
  return y;
}

std::vector<double> demodulate_recover(const TimeSignal& y,
                                       std::span<const double> alphas,
                                       std::size_t num_ues,
                                       const NormalizationStats& stats) {
  if (y.size() != alphas.size()) {
    throw std::invalid_argument("demodulate_recover: alphas/signal size mismatch");
  }
  if (num_ues == 0) {
    throw std::invalid_argument("demodulate_recover: num_ues must be positive");
  }
  const Spectrum spectrum = dft(y);
  std::vector<double> out(alphas.size());
  for (std::size_t m = 0; m < alphas.size(); ++m) {
    if (!(alphas[m] > 0.0)) {
      throw std::invalid_argument("demodulate_recover: alphas must be positive");
    }
    out[m] = stats.gamma * std::sqrt(alphas[m]) * spectrum.bins[m].real() /
                 static_cast<double>(num_ues) +
             stats.mu;
  }
  return out;
}

double analytic_mse_subcarrier(const PowerSolution& sol,
                               std::span<const double> gain_mags, double noise_var,
                               const NormalizationStats& stats, std::size_t num_ues) {
  if (gain_mags.size() != sol.powers_mw.size()) {
    throw std::invalid_argument("analytic_mse_subcarrier: gains/powers mismatch");
  }
  double bracket = sol.alpha * noise_var;
  for (std::size_t k = 0; k < gain_mags.size(); ++k) {
    const double mis = gain_mags[k] * std::sqrt(sol.alpha * sol.powers_mw[k]) - 1.0;
    bracket += mis * mis;
  }
  const double k = static_cast<double>(num_ues);
  return stats.gamma * stats.gamma / (k * k) * bracket;
}

double papr_ofdm(const TimeSignal& signal) { return papr(signal); }

OfdmRound run_ofdm_round(std::span<const GradientVector> raw_gradients,
                         std::span<const ChannelRealization> channels,
                         std::size_t num_subcarriers, double p_max_mw,
                         double subcarrier_noise_var, const IcfConfig& icf_cfg,
                         bool clip_enabled, Rng& noise_rng, double gamma_floor) {
  const std::size_t num_ues = raw_gradients.size();
  if (num_ues == 0 || num_ues != channels.size()) {
    throw std::invalid_argument("run_ofdm_round: gradients/channels mismatch");
  }
  const std::size_t n = raw_gradients.front().size();
  const OfdmSymbolPlan plan(n, num_subcarriers);

  const NormalizationStats stats = compute_norm_stats(raw_gradients, gamma_floor);
  std::vector<GradientVector> normalized;
  normalized.reserve(num_ues);
  for (const auto& raw : raw_gradients) normalized.push_back(normalize(raw, stats));

  // per-subcarrier threshold allocation over this round's block-fading state
  std::vector<std::vector<double>> gain_mags(num_ues,
                                             std::vector<double>(num_subcarriers));
  for (std::size_t k = 0; k < num_ues; ++k) {
    if (channels[k].freq_response.size() != num_subcarriers) {
      throw std::invalid_argument("run_ofdm_round: channel frequency response length");
    }
    for (std::size_t m = 0; m < num_subcarriers; ++m) {
      gain_mags[k][m] = std::abs(channels[k].freq_response[m]);
    }
  }
  OfdmRound round;
  round.per_subcarrier = subcarrier_alloc(gain_mags, p_max_mw, subcarrier_noise_var);

  std::vector<double> alphas(num_subcarriers);
  for (std::size_t m = 0; m < num_subcarriers; ++m) {
    alphas[m] = round.per_subcarrier[m].alpha;
  }

  // precoders: sqrt(p_{k,m}) with the channel phase pre-compensated
  std::vector<cvec> precoders(num_ues, cvec(num_subcarriers));
  round.powers_mw.assign(num_ues, 0.0);
  for (std::size_t k = 0; k < num_ues; ++k) {
    for (std::size_t m = 0; m < num_subcarriers; ++m) {
      const double p = round.per_subcarrier[m].powers_mw[k];
      round.powers_mw[k] += p;
      const double phase = std::arg(channels[k].freq_response[m]);
      precoders[k][m] = std::polar(std::sqrt(p), -phase);
    }
  }

  round.recovered.values.assign(n, 0.0);

  double pre_sum = 0.0, pre_max = 0.0, post_sum = 0.0, post_max = 0.0;
  double iters_sum = 0.0, converged = 0.0;
  std::size_t waveform_count = 0;
  double worst_oob = kOobFloorDbm;
  double worst_excess = 0.0;

  for (std::size_t sym = 0; sym < plan.num_symbols(); ++sym) {
    std::vector<TimeSignal> nyquist(num_ues);
    for (std::size_t k = 0; k < num_ues; ++k) {
      const std::vector<double> slice = plan.slice(normalized[k].values, sym);
      const TimeSignal oversampled =
          modulate_symbol(slice, precoders[k], icf_cfg.oversampling);

      const double pre_db = papr_db_or_zero(oversampled);
      pre_sum += pre_db;
      pre_max = waveform_count == 0 ? pre_db : std::max(pre_max, pre_db);
      ++waveform_count;

      if (clip_enabled) {
        auto [shaped, report] = icf(oversampled, icf_cfg);
        post_sum += report.papr_after_db;
        post_max = std::max(post_max, report.papr_after_db);
        iters_sum += report.iterations_used;
        converged += report.converged ? 1.0 : 0.0;
        worst_oob = std::max(worst_oob, report.final_oob_dbm);
        worst_excess = std::max(worst_excess, report.residual_peak_excess_db);

        const Spectrum shaped_spectrum = dft(shaped);
        nyquist[k] = nyquist_signal(
            std::span<const cplx>(shaped_spectrum.bins.data(), num_subcarriers));
      } else {
        post_sum += pre_db;
        post_max = std::max(post_max, pre_db);
        nyquist[k] = modulate_symbol(slice, precoders[k], 1);
      }
    }

    const TimeSignal y =
        transmit_through_channel(nyquist, channels, subcarrier_noise_var, noise_rng);
    const std::vector<double> entries = demodulate_recover(y, alphas, num_ues, stats);
    for (std::size_t m = 0; m < num_subcarriers; ++m) {
      const std::size_t idx = plan.entry_index(sym, m);
      if (idx < n) round.recovered.values[idx] = entries[m];
    }
  }

  const double count = static_cast<double>(waveform_count);
  round.papr_mean_db = pre_sum / count;
  round.papr_max_db = pre_max;
  round.papr_post_mean_db = post_sum / count;
  round.papr_post_max_db = post_max;
  if (clip_enabled) {
    round.icf_iters_mean = iters_sum / count;
    round.icf_converged_frac = converged / count;
    round.oob_final_dbm = worst_oob;
    round.residual_peak_excess_db = worst_excess;
  }

  // per-round closed-form MSE: mean over the mapped entries
  std::vector<double> per_subcarrier_mse(num_subcarriers);
  for (std::size_t m = 0; m < num_subcarriers; ++m) {
    std::vector<double> column(num_ues);
    for (std::size_t k = 0; k < num_ues; ++k) column[k] = gain_mags[k][m];
    per_subcarrier_mse[m] = analytic_mse_subcarrier(
        round.per_subcarrier[m], column, subcarrier_noise_var, stats, num_ues);
  }
  double mse_sum = 0.0;
  for (std::size_t idx = 0; idx < n; ++idx) {
    mse_sum += per_subcarrier_mse[idx % num_subcarriers];
  }
  round.analytic_mse = mse_sum / static_cast<double>(n);
  return round;
}

}  // namespace otafl
