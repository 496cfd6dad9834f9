#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "otafl/aircomp_ofdm.hpp"
#include "otafl/units.hpp"
#include "test_util.hpp"

using namespace otafl;

namespace {

TimeSignal random_inband_symbol(std::size_t num_sub, int oversampling, Rng& rng) {
  Spectrum g;
  g.bins.resize(num_sub);
  for (auto& b : g.bins) b = cplx(rng.normal(), 0.0);
  return idft(oversample_pad(g, oversampling), oversampling);
}

double mean_power(const TimeSignal& s) {
  double sum = 0.0;
  for (const auto& v : s.samples) sum += std::norm(v);
  return sum / static_cast<double>(s.size());
}

std::vector<GradientVector> random_raws(std::size_t num_ues, std::size_t n, Rng& rng) {
  std::vector<GradientVector> out(num_ues);
  for (auto& g : out) {
    g.values.resize(n);
    for (auto& v : g.values) v = 0.2 + rng.normal();
  }
  return out;
}

std::vector<ChannelRealization> random_channels(std::size_t num_ues, std::size_t num_sub,
                                                Rng& rng) {
  std::vector<ChannelRealization> out(num_ues);
  for (auto& ch : out) {
    const UePosition pos{20.0 + 60.0 * rng.uniform(), 0.0};
    ch = draw_multipath(pos, 2.6e9, 4, num_sub, rng);
  }
  return out;
}

double tse(const GradientVector& got, std::span<const GradientVector> raws) {
  double sum = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    double mean = 0.0;
    for (const auto& g : raws) mean += g.values[i];
    mean /= static_cast<double>(raws.size());
    const double d = got.values[i] - mean;
    sum += d * d;
  }
  return sum / static_cast<double>(got.size());
}

}  // namespace

TEST_CASE("OfdmSymbolPlan maps every entry once and zero-fills the tail") {
  const OfdmSymbolPlan plan(10, 4);
  CHECK(plan.num_symbols() == 3);
  CHECK(plan.entry_index(2, 1) == 9);

  std::vector<double> values(10);
  for (std::size_t i = 0; i < 10; ++i) values[i] = static_cast<double>(i + 1);
  std::vector<bool> seen(10, false);
  for (std::size_t sym = 0; sym < plan.num_symbols(); ++sym) {
    const auto slice = plan.slice(values, sym);
    REQUIRE(slice.size() == 4);
    for (std::size_t m = 0; m < 4; ++m) {
      const std::size_t n = plan.entry_index(sym, m);
      if (n < 10) {
        CHECK(slice[m] == values[n]);
        seen[n] = true;
      } else {
        CHECK(slice[m] == 0.0);  // padding entries carry exactly zero
      }
    }
  }
  for (bool s : seen) CHECK(s);
}

TEST_CASE("modulate_symbol") {
  SUBCASE("only the DC subcarrier active gives a constant signal") {
    const std::vector<double> slice = {1.0, 0.0, 0.0, 0.0};
    const cvec precoders(4, cplx(1.0, 0.0));
    const TimeSignal s = modulate_symbol(slice, precoders, 2);
    REQUIRE(s.size() == 8);
    for (const auto& v : s.samples) CHECK(std::abs(v - cplx(1.0, 0.0)) < 1e-12);
  }
  SUBCASE("two-point hand evaluation") {
    const std::vector<double> slice = {1.0, 1.0};
    const cvec precoders(2, cplx(1.0, 0.0));
    const TimeSignal s = modulate_symbol(slice, precoders, 1);
    CHECK(std::abs(s.samples[0] - cplx(2.0, 0.0)) < 1e-12);
    CHECK(std::abs(s.samples[1] - cplx(0.0, 0.0)) < 1e-12);
  }
  SUBCASE("phase pre-compensation cancels the channel phase") {
    const cplx h = std::polar(0.8, 1.1);  // |H| e^{j phi}
    const cplx b = std::polar(std::sqrt(0.5), -1.1);
    const cplx effective = h * b;
    CHECK(effective.imag() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(effective.real() == doctest::Approx(0.8 * std::sqrt(0.5)).epsilon(1e-12));
  }
}

TEST_CASE("icf: in-band signal already below the limit passes through") {
  Rng rng(10);
  const TimeSignal s = random_inband_symbol(8, 4, rng);
  IcfConfig cfg;
  cfg.level = ClipLevel(1e6);  // far above any sample
  cfg.oversampling = 4;
  const auto [out, report] = icf(s, cfg);
  CHECK(report.iterations_used == 1);
  CHECK(report.converged);
  CHECK(report.residual_peak_excess_db == 0.0);
  CHECK(testutil::max_abs_diff(out.samples, s.samples) < 1e-12);
}

TEST_CASE("icf: unbounded level leaves the waveform and its PAPR unchanged") {
  Rng rng(11);
  const TimeSignal s = random_inband_symbol(16, 4, rng);
  IcfConfig cfg;
  cfg.level = ClipLevel::unbounded();
  cfg.oversampling = 4;
  const auto [out, report] = icf(s, cfg);
  CHECK(report.converged);
  CHECK(testutil::max_abs_diff(out.samples, s.samples) < 1e-12);
  CHECK(report.papr_after_db == doctest::Approx(report.papr_before_db).epsilon(1e-9));
}

TEST_CASE("icf: 3 dB headroom on random symbols reduces PAPR and controls the spectrum") {
  Rng rng(2025);
  const std::size_t num_sub = 32;
  for (int seed = 0; seed < 100; ++seed) {
    const TimeSignal s = random_inband_symbol(num_sub, 4, rng);
    IcfConfig cfg;
    cfg.level = ClipLevel(std::sqrt(2.0 * mean_power(s)));
    cfg.oob_threshold_dbm = to_db(mean_power(s)) - 33.0;  // well below the carrier
    cfg.oversampling = 4;
    const auto [out, report] = icf(s, cfg);

    CHECK(report.papr_after_db < report.papr_before_db);
    CHECK(report.final_oob_dbm <= report.first_oob_dbm);
    if (report.converged) {
      CHECK(report.final_oob_dbm <= cfg.oob_threshold_dbm);
    } else {
      CHECK(report.iterations_used == cfg.max_iters);
    }

    // the returned signal is the filtered one: exactly zero out of band
    const Spectrum spectrum = dft(out);
    for (std::size_t m = num_sub; m < spectrum.size(); ++m) {
      CHECK(std::abs(spectrum.bins[m]) < 1e-13);
    }
  }
}

TEST_CASE("transmit_through_channel") {
  SUBCASE("single-tap unit channel, no noise: identity") {
    Rng rng(3);
    const TimeSignal s = random_inband_symbol(8, 1, rng);
    ChannelRealization ch;
    ch.flat_gain = 1.0;
    ch.taps = {cplx(1.0, 0.0)};
    ch.freq_response.assign(8, cplx(1.0, 0.0));
    Rng noise(0);
    const std::vector<TimeSignal> signals = {s};
    const std::vector<ChannelRealization> channels = {ch};
    const TimeSignal y = transmit_through_channel(signals, channels, 0.0, noise);
    CHECK(testutil::max_abs_diff(y.samples, s.samples) < 1e-15);
  }
  SUBCASE("all-zero inputs leave complex noise of variance sigma^2 M per sample") {
    const std::size_t num_sub = 32;
    const double sigma2 = 0.05;
    TimeSignal zero;
    zero.samples.assign(num_sub, cplx(0.0, 0.0));
    ChannelRealization ch;
    ch.flat_gain = 1.0;
    ch.taps = {cplx(1.0, 0.0)};
    ch.freq_response.assign(num_sub, cplx(1.0, 0.0));
    Rng noise(77);
    double var = 0.0;
    const int reps = 4000;
    const std::vector<TimeSignal> signals = {zero};
    const std::vector<ChannelRealization> channels = {ch};
    for (int r = 0; r < reps; ++r) {
      const TimeSignal y = transmit_through_channel(signals, channels, sigma2, noise);
      for (const auto& v : y.samples) var += std::norm(v);
    }
    var /= static_cast<double>(reps) * num_sub;
    CHECK(var == doctest::Approx(sigma2 * num_sub).epsilon(0.02));
  }
  SUBCASE("noiseless superposition is linear") {
    Rng rng(4);
    const std::size_t num_sub = 8;
    auto channels = random_channels(2, num_sub, rng);
    std::vector<TimeSignal> a = {random_inband_symbol(num_sub, 1, rng),
                                 random_inband_symbol(num_sub, 1, rng)};
    std::vector<TimeSignal> b = {random_inband_symbol(num_sub, 1, rng),
                                 random_inband_symbol(num_sub, 1, rng)};
    std::vector<TimeSignal> sum = a;
    for (std::size_t k = 0; k < 2; ++k) {
      for (std::size_t i = 0; i < num_sub; ++i) sum[k].samples[i] += b[k].samples[i];
    }
    Rng n1(0), n2(0), n3(0);
    const TimeSignal ya = transmit_through_channel(a, channels, 0.0, n1);
    const TimeSignal yb = transmit_through_channel(b, channels, 0.0, n2);
    const TimeSignal ysum = transmit_through_channel(sum, channels, 0.0, n3);
    for (std::size_t i = 0; i < num_sub; ++i) {
      CHECK(std::abs(ysum.samples[i] - ya.samples[i] - yb.samples[i]) < 1e-12);
    }
  }
}

TEST_CASE("demodulation recovers the channel-inverted slice exactly without noise") {
  Rng rng(5);
  const std::size_t num_sub = 16;
  const auto channels = random_channels(1, num_sub, rng);

  std::vector<double> slice(num_sub);
  for (auto& v : slice) v = rng.normal();

  // channel inversion per subcarrier: |H| sqrt(p) = 1, alpha = 1
  cvec precoders(num_sub);
  for (std::size_t m = 0; m < num_sub; ++m) {
    const cplx h = channels[0].freq_response[m];
    precoders[m] = std::polar(1.0 / std::abs(h), -std::arg(h));
  }
  const std::vector<TimeSignal> signals = {modulate_symbol(slice, precoders, 1)};
  Rng noise(0);
  const TimeSignal y = transmit_through_channel(signals, channels, 0.0, noise);

  const std::vector<double> alphas(num_sub, 1.0);
  const NormalizationStats stats{0.0, 1.0};
  const auto out = demodulate_recover(y, alphas, 1, stats);
  for (std::size_t m = 0; m < num_sub; ++m) {
    CHECK(out[m] == doctest::Approx(slice[m]).epsilon(1e-9));
  }
}

TEST_CASE("demodulate_recover: zero input returns mu everywhere") {
  TimeSignal y;
  y.samples.assign(8, cplx(0.0, 0.0));
  const std::vector<double> alphas(8, 2.0);
  const auto out = demodulate_recover(y, alphas, 3, NormalizationStats{0.6, 1.4});
  for (double v : out) CHECK(v == doctest::Approx(0.6));
}

TEST_CASE("demodulate_recover: noise-only per-entry variance carries the real-part 1/2") {
  // complex per-bin noise CN(0, sigma^2): the real part holds half the power,
  // so the recovered entries have variance Gamma^2 alpha sigma^2 / (2 K^2)
  const std::size_t num_sub = 32;
  const double sigma2 = 0.2;
  const double alpha = 3.0;
  const std::size_t num_ues = 2;
  const NormalizationStats stats{0.25, 1.6};

  ChannelRealization ch;
  ch.flat_gain = 1.0;
  ch.taps = {cplx(1.0, 0.0)};
  ch.freq_response.assign(num_sub, cplx(1.0, 0.0));
  TimeSignal zero;
  zero.samples.assign(num_sub, cplx(0.0, 0.0));

  Rng noise(909);
  const std::vector<double> alphas(num_sub, alpha);
  double var = 0.0;
  const int reps = 4000;
  const std::vector<TimeSignal> signals = {zero};
  const std::vector<ChannelRealization> channels = {ch};
  for (int r = 0; r < reps; ++r) {
    const TimeSignal y = transmit_through_channel(signals, channels, sigma2, noise);
    const auto out = demodulate_recover(y, alphas, num_ues, stats);
    for (double v : out) var += (v - stats.mu) * (v - stats.mu);
  }
  var /= static_cast<double>(reps) * num_sub;
  const double expected = stats.gamma * stats.gamma * alpha * sigma2 /
                          (2.0 * static_cast<double>(num_ues * num_ues));
  CHECK(var == doctest::Approx(expected).epsilon(0.03));
}

TEST_CASE("analytic_mse_subcarrier") {
  const NormalizationStats stats{0.0, 1.5};
  SUBCASE("aligned, noiseless: zero") {
    PowerSolution sol;
    sol.alpha = 4.0;
    sol.powers_mw = {1.0 / (4.0 * 0.81), 1.0 / (4.0 * 0.09)};
    const std::vector<double> gains = {0.9, 0.3};
    CHECK(analytic_mse_subcarrier(sol, gains, 0.0, stats, 2) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("aligned with noise: Gamma^2 alpha sigma^2 / K^2") {
    PowerSolution sol;
    sol.alpha = 4.0;
    sol.powers_mw = {1.0 / (4.0 * 0.81)};
    const std::vector<double> gains = {0.9};
    const double expected = 1.5 * 1.5 * 4.0 * 0.3 / 1.0;
    CHECK(analytic_mse_subcarrier(sol, gains, 0.3, stats, 1) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("matches the Monte-Carlo expectation with complex per-bin noise") {
    const std::vector<double> gains = {0.9, 0.45};
    const double p_budget = 0.6;
    const double sigma2 = 0.15;
    const NormalizationStats st{0.3, 1.2};
    const PowerSolution sol = solve_power_alloc(ChannelGains(gains), p_budget, sigma2);
    const double analytic = analytic_mse_subcarrier(sol, gains, sigma2, st, 2);

    Rng rng(5150);
    const int trials = 100000;
    double total = 0.0;
    for (int t = 0; t < trials; ++t) {
      cplx y = 0.0;
      double mean_g = 0.0;
      for (std::size_t k = 0; k < 2; ++k) {
        const double g = rng.normal();
        mean_g += g / 2.0;
        y += gains[k] * std::sqrt(sol.powers_mw[k]) * g;
      }
      y += std::sqrt(sigma2) * rng.cnormal();
      const cplx recovered = st.gamma * std::sqrt(sol.alpha) * y / 2.0 + st.mu;
      const cplx target = st.gamma * mean_g + st.mu;
      total += std::norm(recovered - target);
    }
    CHECK(total / trials == doctest::Approx(analytic).epsilon(0.03));
  }
}

TEST_CASE("papr_ofdm") {
  SUBCASE("a single active subcarrier is constant-envelope: PAPR 1") {
    const std::vector<double> slice = {0.0, 1.0, 0.0, 0.0};
    const cvec precoders(4, cplx(1.0, 0.0));
    const TimeSignal s = modulate_symbol(slice, precoders, 4);
    CHECK(papr_ofdm(s) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("two equal bins: PAPR 2") {
    const std::vector<double> slice = {1.0, 1.0};
    const cvec precoders(2, cplx(1.0, 0.0));
    const TimeSignal s = modulate_symbol(slice, precoders, 1);
    CHECK(papr_ofdm(s) == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("M=32 Gaussian bins at 4x oversampling: mean PAPR near the oracle value") {
    // independent Monte-Carlo oracle (direct synthesis sum): mean linear PAPR
    // ~ 4.2 (6.2 dB); the max over ~1e3 symbols lands around 9-12 dB
    Rng rng(31337);
    const int symbols = 1000;
    double mean_lin = 0.0, max_lin = 0.0;
    for (int s = 0; s < symbols; ++s) {
      const TimeSignal sym = random_inband_symbol(32, 4, rng);
      const double p = papr_ofdm(sym);
      mean_lin += p;
      max_lin = std::max(max_lin, p);
    }
    mean_lin /= symbols;
    CHECK(to_db(mean_lin) > 5.5);
    CHECK(to_db(mean_lin) < 7.5);
    CHECK(to_db(max_lin) > 8.5);
    CHECK(to_db(max_lin) < 12.5);
  }
}

TEST_CASE("full round: noiseless, clipping off recovers the exact average") {
  Rng rng(246);
  const std::size_t num_ues = 3, n = 40, num_sub = 16;
  const auto raws = random_raws(num_ues, n, rng);
  const auto channels = random_channels(num_ues, num_sub, rng);

  Rng noise(0);
  IcfConfig cfg;
  cfg.oversampling = 4;
  const OfdmRound round = run_ofdm_round(raws, channels, num_sub, 1e3, 0.0, cfg,
                                         /*clip_enabled=*/false, noise);
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (const auto& g : raws) mean += g.values[i];
    mean /= static_cast<double>(num_ues);
    CHECK(round.recovered.values[i] == doctest::Approx(mean).epsilon(1e-9));
  }
  CHECK(round.analytic_mse == doctest::Approx(0.0).epsilon(1e-12));
  // per-UE budget respected
  for (double p : round.powers_mw) CHECK(p <= 1e3 * (1.0 + 1e-9));
}

TEST_CASE("clip-induced error grows when the noise is low (alpha amplification)") {
  // reference-scenario regime: 23 dBm budget, 26 dBm peak, noise PSD
  // -110 dBm/Hz over 60 kHz carriers, and 100x that for the high level
  const std::size_t num_ues = 8, n = 128, num_sub = 32;
  const int rounds = 100;
  const double p_max = dbm_to_mw(23.0);
  const double a2 = dbm_to_mw(26.0);
  const double sigma2_low = dbm_to_mw(-110.0) * 60e3;
  const double sigma2_high = 100.0 * sigma2_low;

  double gap_low = 0.0, gap_high = 0.0;
  int low_worse = 0, high_worse = 0;

  for (int t = 0; t < rounds; ++t) {
    Rng round_rng = Rng::stream(4242, 1, t);
    const auto raws = random_raws(num_ues, n, round_rng);
    Rng pos_rng = Rng::stream(4242, 5, t);
    const auto positions = place_ues(num_ues, 100.0, pos_rng);
    std::vector<ChannelRealization> channels(num_ues);
    for (std::size_t k = 0; k < num_ues; ++k) {
      Rng chan_rng = Rng::stream(4242, 6, t, k);
      channels[k] = draw_multipath(positions[k], 2.6e9, 4, num_sub, chan_rng);
    }

    for (int which = 0; which < 2; ++which) {
      const double sigma2 = which == 0 ? sigma2_low : sigma2_high;
      IcfConfig cfg;
      cfg.level = ClipLevel(std::sqrt(a2));
      cfg.oob_threshold_dbm = -10.0;
      cfg.oversampling = 4;
      Rng noise_a = Rng::stream(4242, 2, t, which);
      Rng noise_b = Rng::stream(4242, 2, t, which);
      const OfdmRound clipped = run_ofdm_round(raws, channels, num_sub, p_max, sigma2,
                                               cfg, true, noise_a);
      const OfdmRound clean = run_ofdm_round(raws, channels, num_sub, p_max, sigma2,
                                             cfg, false, noise_b);
      const double gap = tse(clipped.recovered, raws) - tse(clean.recovered, raws);
      if (which == 0) {
        gap_low += gap;
        if (gap > 0.0) ++low_worse;
      } else {
        gap_high += gap;
        if (gap > 0.0) ++high_worse;
      }
    }
  }
  CHECK(gap_low / rounds > gap_high / rounds);
  CHECK(testutil::sign_test_p_value(low_worse, rounds) < 0.01);
  CHECK(testutil::sign_test_p_value(high_worse, rounds) < 0.01);
}

TEST_CASE("error paths") {
  CHECK_THROWS_AS(OfdmSymbolPlan(0, 4), std::invalid_argument);
  CHECK_THROWS_AS(OfdmSymbolPlan(4, 0), std::invalid_argument);
  const std::vector<double> slice = {1.0, 2.0};
  const cvec precoders(3, cplx(1.0, 0.0));
  CHECK_THROWS_AS(modulate_symbol(slice, precoders, 1), std::invalid_argument);

  Rng rng(1);
  TimeSignal s = random_inband_symbol(8, 2, rng);
  IcfConfig cfg;
  cfg.oversampling = 4;  // does not match the signal
  CHECK_THROWS_AS(icf(s, cfg), std::invalid_argument);

  TimeSignal y;
  y.samples.assign(4, cplx(0.0, 0.0));
  const std::vector<double> alphas(3, 1.0);
  CHECK_THROWS_AS(demodulate_recover(y, alphas, 1, NormalizationStats{}),
                  std::invalid_argument);
}
