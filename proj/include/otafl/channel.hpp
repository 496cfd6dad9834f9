#pragma once

#include <cstddef>
#include <vector>

#include "otafl/dsp.hpp"
#include "otafl/rng.hpp"

namespace otafl {

inline constexpr double kSpeedOfLightMps = 299792458.0;
inline constexpr double kDefaultCarrierHz = 2.6e9;
inline constexpr double kMinUeDistanceM = 1.0;  // free-space gain clamp

struct UePosition {
  double x = 0.0;
  double y = 0.0;
  double distance() const;  // to the base station at the origin
};

/// One block-fading realization for one UE. freq_response[m] is the
/// per-subcarrier response of `taps`, consistent with circ_conv + dft:
/// dft(circ_conv(s, taps))[m] == freq_response[m] * dft(s)[m].
struct ChannelRealization {
  double flat_gain = 0.0;  // large-scale amplitude gain (reference)
  cvec taps;
  cvec freq_response;
};

/// i.i.d. area-uniform positions on a disk of the given radius.
std::vector<UePosition> place_ues(std::size_t count, double radius_m, Rng& rng);

/// Free-space amplitude gain c / (4 pi d f). Distances below kMinUeDistanceM
/// are clamped (noted once on stderr) to avoid the d -> 0 singularity.
double path_gain(double distance_m, double carrier_hz);

/// Flat channel amplitude: free-space gain times a unit-mean-power Rayleigh
/// small-scale factor. Always positive.
double draw_flat_channel(const UePosition& position, double carrier_hz, Rng& rng);

/// Multipath realization: num_taps complex Gaussian taps with an exponential
/// power-delay profile (decay constant in taps) normalized to unit total
/// power, scaled by the free-space gain. num_subcarriers sets the length of
/// the derived frequency response.
ChannelRealization draw_multipath(const UePosition& position, double carrier_hz,
                                  std::size_t num_taps, std::size_t num_subcarriers,
                                  Rng& rng, double delay_decay_taps = 1.0);

}  // namespace otafl
