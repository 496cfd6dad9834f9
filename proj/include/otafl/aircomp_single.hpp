#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "otafl/channel.hpp"
#include "otafl/dsp.hpp"
#include "otafl/power_control.hpp"
#include "otafl/rng.hpp"

namespace otafl {

// Normalizing statistics shared by all UEs in a round. gamma is clamped to a
// small floor so the degenerate all-constant-gradient round stays finite.
inline constexpr double kGammaFloor = 1e-8;

struct NormalizationStats {
  double mu = 0.0;
  double gamma = 1.0;
};

struct GradientVector {
  std::vector<double> values;
  bool normalized = false;
  std::size_t size() const { return values.size(); }
};

/// Cross-UE statistics: per-UE mean and (population) std, then averaged.
NormalizationStats compute_norm_stats(std::span<const GradientVector> raw,
                                      double gamma_floor = kGammaFloor);

GradientVector normalize(const GradientVector& raw, const NormalizationStats& stats);
GradientVector denormalize(const GradientVector& g, const NormalizationStats& stats);

/// Per-sample transmit waveform: clip(sqrt(power_mw) * g[n]) at the device's
/// amplitude limit. With an unbounded level this is exactly sqrt(p) * g.
TimeSignal transmit_clipped(const GradientVector& g, double power_mw, ClipLevel level);

/// Multiple-access superposition y = sum_k h_k x_k + n with i.i.d. real
/// zero-mean Gaussian noise of variance noise_var per sample.
TimeSignal superpose_receive(std::span<const TimeSignal> signals,
                             const ChannelGains& gains, double noise_var, Rng& rng);

/// Receiver rescale + de-normalize: g~ = Gamma * sqrt(alpha) * y / K + mu.
GradientVector recover(const TimeSignal& y, double alpha, std::size_t num_ues,
                       const NormalizationStats& stats);

/// Closed-form aggregation MSE:
/// (Gamma^2 N / K^2) (sum_k (h_k sqrt(alpha p_k) - 1)^2 + alpha sigma^2).
double analytic_mse_single_carrier(const PowerSolution& sol, const ChannelGains& gains,
                                   double noise_var, const NormalizationStats& stats,
                                   std::size_t vector_len, std::size_t num_ues);

/// PAPR of a gradient vector treated as an amplitude-modulated waveform.
double papr_gradient(const GradientVector& g);

/// One full single-carrier aggregation: stats -> normalize -> power control ->
/// clipped transmit -> superpose -> recover. PAPR columns describe the
/// unclipped waveforms (pre) and the actually transmitted ones (post).
struct SingleCarrierRound {
  GradientVector recovered;
  PowerSolution power;
  double analytic_mse = 0.0;  // per entry, same scale as the true squared error
  double papr_mean_db = 0.0;
  double papr_max_db = 0.0;
  double papr_post_mean_db = 0.0;
  double papr_post_max_db = 0.0;
};

SingleCarrierRound run_single_carrier_round(std::span<const GradientVector> raw_gradients,
                                            const ChannelGains& gains, double p_max_mw,
                                            double noise_var, ClipLevel level,
                                            Rng& noise_rng,
                                            double gamma_floor = kGammaFloor);

}  // namespace otafl
