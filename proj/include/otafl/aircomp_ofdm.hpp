#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "otafl/aircomp_single.hpp"
#include "otafl/channel.hpp"
#include "otafl/dsp.hpp"
#include "otafl/power_control.hpp"
#include "otafl/rng.hpp"

namespace otafl {

/// Maps gradient entries onto OFDM symbols: symbol l, subcarrier m carries
/// entry n = l*M + m; entries at n >= N are transmitted as zeros.
struct OfdmSymbolPlan {
  OfdmSymbolPlan(std::size_t gradient_len, std::size_t num_subcarriers);

  std::size_t gradient_len = 0;     // N
  std::size_t num_subcarriers = 0;  // M

  std::size_t num_symbols() const;  // ceil(N / M)
  std::size_t entry_index(std::size_t symbol, std::size_t subcarrier) const;

  /// Length-M slice for one symbol, zero-filled past the end of the vector.
  std::vector<double> slice(std::span<const double> values, std::size_t symbol) const;
};

struct IcfConfig {
  ClipLevel level = ClipLevel::unbounded();
  double oob_threshold_dbm = -10.0;
  int max_iters = 16;
  int oversampling = 4;
};

struct IcfReport {
  int iterations_used = 0;
  double first_oob_dbm = kOobFloorDbm;  // after the first clip
  double final_oob_dbm = kOobFloorDbm;  // after the last clip
  bool converged = false;
  double papr_before_db = 0.0;
  double papr_after_db = 0.0;
  double residual_peak_excess_db = 0.0;  // filtered peak above a_max, 0 if within
};

/// Oversampled modulation of one symbol: in-band bins are slice[m] *
/// precoders[m], zero-padded by `oversampling` before the synthesis
/// transform. Precoders carry sqrt(power) and the channel phase
/// pre-compensation.
TimeSignal modulate_symbol(std::span<const double> slice,
                           std::span<const cplx> precoders, int oversampling);

/// Iterative clipping and filtering. Each pass clips, measures the clipped
/// spectrum's out-of-band power, filters it to the in-band bins, and
/// resynthesizes. Stops once the post-clip out-of-band power reaches the
/// threshold or max_iters passes ran; either way the returned signal is the
/// last filtered one, so its spectrum is exactly zero out of band.
/// Non-convergence is reported, never thrown.
std::pair<TimeSignal, IcfReport> icf(const TimeSignal& signal, const IcfConfig& cfg);

/// Nyquist-rate synthesis from the in-band bins of a (filtered) spectrum.
TimeSignal nyquist_signal(std::span<const cplx> in_band_bins);

/// Per-UE circular convolution with the multipath taps, superposition, and
/// complex Gaussian noise of per-sample variance subcarrier_noise_var * M.
TimeSignal transmit_through_channel(std::span<const TimeSignal> signals,
                                    std::span<const ChannelRealization> channels,
                                    double subcarrier_noise_var, Rng& rng);

/// Per-subcarrier recovery g~[m] = Gamma sqrt(alpha_m) Re(Y[m]) / K + mu.
/// The imaginary part is discarded: the aggregated values are real.
std::vector<double> demodulate_recover(const TimeSignal& y,
                                       std::span<const double> alphas,
                                       std::size_t num_ues,
                                       const NormalizationStats& stats);

/// Closed-form per-subcarrier MSE
/// (Gamma^2 / K^2) (sum_k (|H_k| sqrt(alpha p_k) - 1)^2 + alpha sigma^2),
/// evaluated against complex per-subcarrier noise as stated.
double analytic_mse_subcarrier(const PowerSolution& sol,
                               std::span<const double> gain_mags, double noise_var,
                               const NormalizationStats& stats, std::size_t num_ues);

/// PAPR of one (oversampled) OFDM symbol.
double papr_ofdm(const TimeSignal& signal);

struct OfdmRound {
  GradientVector recovered;
  std::vector<PowerSolution> per_subcarrier;
  double analytic_mse = 0.0;
  double papr_mean_db = 0.0;       // unclipped, over (UE, symbol)
  double papr_max_db = 0.0;
  double papr_post_mean_db = 0.0;  // after ICF (equals pre when clipping is off)
  double papr_post_max_db = 0.0;
  double icf_iters_mean = 0.0;
  double icf_converged_frac = 1.0;
  double oob_final_dbm = kOobFloorDbm;     // worst final out-of-band power
  double residual_peak_excess_db = 0.0;    // worst post-filter peak regrowth
  std::vector<double> powers_mw;           // per-UE total across subcarriers
};

/// One full OFDM aggregation round over all symbols of the gradient vector.
OfdmRound run_ofdm_round(std::span<const GradientVector> raw_gradients,
                         std::span<const ChannelRealization> channels,
                         std::size_t num_subcarriers, double p_max_mw,
                         double subcarrier_noise_var, const IcfConfig& icf_cfg,
                         bool clip_enabled, Rng& noise_rng,
                         double gamma_floor = kGammaFloor);

}  // namespace otafl
