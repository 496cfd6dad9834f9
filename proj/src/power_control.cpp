#include "otafl/power_control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace otafl {

ChannelGains::ChannelGains(std::vector<double> gains) : gains_(std::move(gains)) {
  if (gains_.empty()) {
    throw std::invalid_argument("ChannelGains: at least one gain required");
  }
  for (double g : gains_) {
    if (!(g > 0.0) || !std::isfinite(g)) {
      throw std::invalid_argument("ChannelGains: gains must be positive and finite");
    }
  }
  order_.resize(gains_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(),
                   [this](std::size_t a, std::size_t b) { return gains_[a] > gains_[b]; });
}

double mse_objective(double alpha, std::span<const double> powers_mw,
                     const ChannelGains& gains, double noise_var) {
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("mse_objective: alpha must be positive");
  }
  if (powers_mw.size() != gains.count()) {
    throw std::invalid_argument("mse_objective: powers/gains size mismatch");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < gains.count(); ++k) {
    const double p = powers_mw[k];
    if (p < 0.0) {
      throw std::invalid_argument("mse_objective: negative power");
    }
    const double mis = gains.linear()[k] * std::sqrt(alpha * p) - 1.0;
    sum += mis * mis;
  }
  return sum + alpha * noise_var;
}

PowerSolution solve_power_alloc(const ChannelGains& gains, double p_max_mw,
                                double noise_var) {
  if (!(p_max_mw > 0.0)) {
    throw std::invalid_argument("solve_power_alloc: p_max must be positive");
  }
  if (noise_var < 0.0) {
    throw std::invalid_argument("solve_power_alloc: negative noise variance");
  }
  const std::size_t count = gains.count();
  const auto& order = gains.order();

  // suffix sums over the descending order: sums from rank r to the end
  std::vector<double> suffix_h(count + 1, 0.0), suffix_h2(count + 1, 0.0);
  for (std::size_t r = count; r-- > 0;) {
    const double h = gains.sorted(r);
    suffix_h[r] = suffix_h[r + 1] + h;
    suffix_h2[r] = suffix_h2[r + 1] + h * h;
  }

  PowerSolution best;
  double best_obj = std::numeric_limits<double>::infinity();

  for (std::size_t r = 0; r < count; ++r) {  // threshold rank, k_star = r + 1
    const double ratio = suffix_h[r] / (suffix_h2[r] + noise_var / p_max_mw);
    const double alpha = ratio * ratio / p_max_mw;

    // the case split is consistent only if every inverting UE stays within
    // budget; the weakest inverting UE (rank r-1) needs the most power
    if (r > 0) {
      const double h_edge = gains.sorted(r - 1);
      const double p_edge = 1.0 / (alpha * h_edge * h_edge);
      if (p_edge > p_max_mw * (1.0 + 1e-12)) continue;
    }

    std::vector<double> powers(count, p_max_mw);
    for (std::size_t q = 0; q < r; ++q) {
      const double h = gains.sorted(q);
      powers[order[q]] = 1.0 / (alpha * h * h);
    }

    const double obj = mse_objective(alpha, powers, gains, noise_var);
    if (obj < best_obj) {
      best_obj = obj;
      best.alpha = alpha;
      best.powers_mw = std::move(powers);
      best.k_star = r + 1;
      best.objective = obj;
    }
  }
  return best;
}

std::vector<PowerSolution> subcarrier_alloc(
    const std::vector<std::vector<double>>& gains_by_ue, double p_max_mw,
    double noise_var) {
  if (gains_by_ue.empty()) {
    throw std::invalid_argument("subcarrier_alloc: no UEs");
  }
  const std::size_t num_sub = gains_by_ue.front().size();
  if (num_sub == 0) {
    throw std::invalid_argument("subcarrier_alloc: no subcarriers");
  }
  for (const auto& row : gains_by_ue) {
    if (row.size() != num_sub) {
      throw std::invalid_argument("subcarrier_alloc: ragged gain matrix");
    }
  }
  const double per_subcarrier_budget = p_max_mw / static_cast<double>(num_sub);

  std::vector<PowerSolution> out;
  out.reserve(num_sub);
  for (std::size_t m = 0; m < num_sub; ++m) {
    std::vector<double> column(gains_by_ue.size());
    for (std::size_t k = 0; k < gains_by_ue.size(); ++k) {
      column[k] = gains_by_ue[k][m];
    }
    out.push_back(solve_power_alloc(ChannelGains(std::move(column)),
                                    per_subcarrier_budget, noise_var));
  }
  return out;
}

}  // namespace otafl
