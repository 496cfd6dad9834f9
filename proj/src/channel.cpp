#include "otafl/channel.hpp"

#include <cmath>
#include <iostream>
#include <numbers>
#include <stdexcept>

namespace otafl {

double UePosition::distance() const { return std::hypot(x, y); }

std::vector<UePosition> place_ues(std::size_t count, double radius_m, Rng& rng) {
  if (!(radius_m > 0.0)) {
    throw std::invalid_argument("place_ues: radius must be positive");
  }
  std::vector<UePosition> out(count);
  for (auto& pos : out) {
    const double r = radius_m * std::sqrt(rng.uniform());  // area-uniform
    const double theta = 2.0 * std::numbers::pi * rng.uniform();
    pos.x = r * std::cos(theta);
    pos.y = r * std::sin(theta);
  }
  return out;
}

double path_gain(double distance_m, double carrier_hz) {
  if (!(carrier_hz > 0.0)) {
    throw std::invalid_argument("path_gain: carrier frequency must be positive");
  }
  double d = distance_m;
  if (d < kMinUeDistanceM) {
    static bool warned = false;
    if (!warned) {
      std::cerr << "path_gain: distance below " << kMinUeDistanceM
                << " m clamped\n";
      warned = true;
    }
    d = kMinUeDistanceM;
  }
  return kSpeedOfLightMps / (4.0 * std::numbers::pi * d * carrier_hz);
}

double draw_flat_channel(const UePosition& position, double carrier_hz, Rng& rng) {
  const double large_scale = path_gain(position.distance(), carrier_hz);
  const double rayleigh = std::abs(rng.cnormal());  // E[r^2] = 1
  return large_scale * rayleigh;
}

ChannelRealization draw_multipath(const UePosition& position, double carrier_hz,
                                  std::size_t num_taps, std::size_t num_subcarriers,
                                  Rng& rng, double delay_decay_taps) {
  if (num_taps < 1 || num_taps > num_subcarriers) {
    throw std::invalid_argument(
        "draw_multipath: need 1 <= num_taps <= num_subcarriers");
  }
  if (!(delay_decay_taps > 0.0)) {
    throw std::invalid_argument("draw_multipath: decay constant must be positive");
  }
  const double large_scale = path_gain(position.distance(), carrier_hz);

  // exponential power-delay profile, unit total power
  std::vector<double> profile(num_taps);
  double total = 0.0;
  for (std::size_t c = 0; c < num_taps; ++c) {
    profile[c] = std::exp(-static_cast<double>(c) / delay_decay_taps);
    total += profile[c];
  }

  ChannelRealization ch;
  ch.flat_gain = large_scale;
  ch.taps.resize(num_taps);
  for (std::size_t c = 0; c < num_taps; ++c) {
    ch.taps[c] = large_scale * std::sqrt(profile[c] / total) * rng.cnormal();
  }

  ch.freq_response.resize(num_subcarriers);
  for (std::size_t m = 0; m < num_subcarriers; ++m) {
    cplx acc = 0.0;
    for (std::size_t c = 0; c < num_taps; ++c) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(m) *
                         static_cast<double>(c) /
                         static_cast<double>(num_subcarriers);
      acc += ch.taps[c] * std::polar(1.0, ang);
    }
    ch.freq_response[m] = acc;
  }
  return ch;
}

}  // namespace otafl
