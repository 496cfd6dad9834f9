#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace otafl {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;

/// Frequency-domain sample sequence. Bin amplitudes are in sqrt(mW), so
/// |bins[m]|^2 is directly a power in mW.
struct Spectrum {
  cvec bins;
  std::size_t size() const { return bins.size(); }
};

/// Time-domain sample sequence. oversampling_factor = 1 means Nyquist rate;
/// a factor L signal holds L * base_length samples of the same waveform.
struct TimeSignal {
  cvec samples;
  int oversampling_factor = 1;
  std::size_t size() const { return samples.size(); }
};

/// Hard amplitude limit of the transmitter front end. a_max^2 is the
/// instantaneous input power limit in mW. unbounded() disables clipping.
class ClipLevel {
 public:
  explicit ClipLevel(double a_max);
  static ClipLevel unbounded();

  double a_max() const { return a_max_; }
  bool enabled() const;

 private:
  double a_max_;
};

inline constexpr double kOobFloorDbm = -200.0;

// Transform convention used everywhere in this library: the synthesis (idft)
// sum carries no prefactor and the analysis (dft) sum carries 1/M, i.e.
//   idft:  s[i] = sum_m G[m] e^{+j 2 pi m i / M}
//   dft:   Y[m] = (1/M) sum_i y[i] e^{-j 2 pi m i / M}
// The two are exact inverses, and pushing time-domain noise of per-sample
// variance v through dft yields per-bin variance v / M.

TimeSignal idft(const Spectrum& spectrum, int oversampling_factor = 1);
Spectrum dft(const TimeSignal& signal);

/// Zero-pads a spectrum from length M to factor * M. Feeding the result to
/// idft interpolates the same waveform at `factor` times the Nyquist rate.
Spectrum oversample_pad(const Spectrum& spectrum, int factor);

/// Phase-preserving hard limiter: x -> min{1, a_max/|x|} x per sample.
/// Idempotent, and never increases any sample magnitude.
TimeSignal clip_amplitude(const TimeSignal& signal, ClipLevel level);

/// Rectangular low-pass: bins [0, in_band) kept, the rest set to exactly zero.
Spectrum rect_filter(const Spectrum& spectrum, std::size_t in_band);

/// Total power of the bins at and above `in_band`, in dBm. Returns floor_dbm
/// when that power is exactly zero so the metric stays total-ordered.
double oob_power_dbm(const Spectrum& spectrum, std::size_t in_band,
                     double floor_dbm = kOobFloorDbm);

/// Peak-to-average power ratio, linear (callers convert to dB as needed).
double papr(const TimeSignal& signal);

/// Circular convolution out[i] = sum_c taps[c] * in[(i - c) mod M]. Under the
/// transform convention above, dft(circ_conv(s, h)) = M * dft(s) . dft(h).
TimeSignal circ_conv(const TimeSignal& signal, std::span<const cplx> taps);

namespace detail {
// sign = +1 synthesis exponent, sign = -1 analysis exponent; no scaling.
cvec fourier_sum(std::span<const cplx> in, int sign);   // direct O(n^2)
cvec fourier_fast(std::span<const cplx> in, int sign);  // radix-2 when possible
}  // namespace detail

}  // namespace otafl
