#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace otafl {

/// Per-UE linear amplitude gains. A descending-order permutation is kept
/// alongside the original order: the threshold allocation is derived in
/// sorted space and mapped back to UE identities.
class ChannelGains {
 public:
  explicit ChannelGains(std::vector<double> gains);

  std::size_t count() const { return gains_.size(); }
  const std::vector<double>& linear() const { return gains_; }

  /// order()[rank] is the original index of the rank-th strongest UE.
  const std::vector<std::size_t>& order() const { return order_; }
  double sorted(std::size_t rank) const { return gains_[order_[rank]]; }

 private:
  std::vector<double> gains_;
  std::vector<std::size_t> order_;
};

/// MSE-optimal transmit powers and denoising factor for one aggregation.
struct PowerSolution {
  double alpha = 0.0;             // denoising factor, 1/mW
  std::vector<double> powers_mw;  // per-UE average transmit power, original order
  std::size_t k_star = 0;         // 1-based rank threshold: ranks < k_star invert
                                  // their channels, ranks >= k_star use the full budget
  double objective = 0.0;         // sum_k (h_k sqrt(alpha p_k) - 1)^2 + alpha sigma^2
};

/// Aggregation-error objective: sum_k (h_k sqrt(alpha p_k) - 1)^2 + alpha * noise_var.
/// `powers_mw` is indexed in the gains' original order.
double mse_objective(double alpha, std::span<const double> powers_mw,
                     const ChannelGains& gains, double noise_var);

/// Threshold power allocation: weak UEs transmit at p_max_mw, UEs above the
/// threshold invert their channels so h_k sqrt(alpha p_k) = 1. All candidate
/// thresholds are evaluated and the consistent one with the smallest
/// objective wins; ties break toward the smaller threshold.
PowerSolution solve_power_alloc(const ChannelGains& gains, double p_max_mw,
                                double noise_var);

/// Per-subcarrier decoupling: each of the M subcarriers gets an equal budget
/// p_max_mw / M and is solved independently. gains_by_ue is K rows of M
/// per-subcarrier amplitude gains.
std::vector<PowerSolution> subcarrier_alloc(
    const std::vector<std::vector<double>>& gains_by_ue, double p_max_mw,
    double noise_var);

}  // namespace otafl
