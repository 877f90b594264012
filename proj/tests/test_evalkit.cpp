#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "spherepinn/evalkit.hpp"
#include "spherepinn/geometry.hpp"

using namespace spherepinn;
using namespace spherepinn::evalkit;

namespace {

TimeSignalSet random_signals(int channels, long length, double fs,
                             unsigned seed) {
  TimeSignalSet s;
  s.fs = fs;
  s.channels = channels;
  s.length = length;
  s.samples.resize(static_cast<size_t>(channels) * length);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& v : s.samples) v = u(rng);
  return s;
}

}  // namespace

TEST_CASE("nmse_time trivial cases") {
  const auto ref = random_signals(3, 256, 16000.0, 1);
  // estimate == reference -> clamp floor
  CHECK(nmse_time(ref, ref).overall_db == kNmseFloorDb);
  // estimate all zeros -> 0 dB
  auto zeros = ref;
  std::fill(zeros.samples.begin(), zeros.samples.end(), 0.0);
  CHECK(nmse_time(zeros, ref).overall_db == doctest::Approx(0.0).epsilon(1e-12));
  // estimate = 2 * reference -> 0 dB
  auto twice = ref;
  for (auto& v : twice.samples) v *= 2.0;
  CHECK(nmse_time(twice, ref).overall_db == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("nmse_time scale invariance and shape checks") {
  const auto ref = random_signals(2, 128, 8000.0, 2);
  auto est = random_signals(2, 128, 8000.0, 3);
  const double base = nmse_time(est, ref).overall_db;
  auto ref_s = ref;
  auto est_s = est;
  for (auto& v : ref_s.samples) v *= -3.7;
  for (auto& v : est_s.samples) v *= -3.7;
  CHECK(std::fabs(nmse_time(est_s, ref_s).overall_db - base) < 1e-12);

  auto bad = random_signals(2, 64, 8000.0, 4);
  CHECK_THROWS_AS(nmse_time(bad, ref), ShapeMismatchError);
  auto zeros = ref;
  std::fill(zeros.samples.begin(), zeros.samples.end(), 0.0);
  CHECK_THROWS_AS(nmse_time(est, zeros), ConfigError);
}

TEST_CASE("nmse_time excludes zero-reference channels with a warning") {
  auto ref = random_signals(3, 64, 8000.0, 5);
  std::fill(ref.channel(1), ref.channel(1) + 64, 0.0);
  auto est = ref;
  for (auto& v : est.samples) v += 0.01;
  const auto rep = nmse_time(est, ref);
  REQUIRE(rep.excluded_channels.size() == 1);
  CHECK(rep.excluded_channels[0] == 1);
  CHECK(rep.per_channel_db.size() == 3);
}

TEST_CASE("nmse_freq examples") {
  sma::ComplexPressureField ref;
  ref.geometry = sma::pentakis32_geometry();
  ref.wavenumbers = {10.0, 20.0};
  ref.pressures.resize(64);
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& p : ref.pressures) p = cplx(u(rng), u(rng));

  CHECK(nmse_freq(ref, ref).overall_db == kNmseFloorDb);

  // estimate = reference * e^{i pi} = -reference -> ratio 4 -> ~6.02 dB
  auto neg = ref;
  for (auto& p : neg.pressures) p = -p;
  const auto rep = nmse_freq(neg, ref);
  CHECK(rep.overall_db == doctest::Approx(20.0 * std::log10(2.0)).epsilon(1e-9));
  for (double v : rep.per_frequency_db)
    CHECK(v == doctest::Approx(20.0 * std::log10(2.0)).epsilon(1e-9));

  // single-bin field, estimate = 0 -> 0 dB
  sma::ComplexPressureField one;
  one.geometry = ref.geometry;
  one.wavenumbers = {15.0};
  one.pressures.assign(32, cplx(0.3, -0.4));
  auto zero = one;
  for (auto& p : zero.pressures) p = cplx{};
  CHECK(nmse_freq(zero, one).overall_db == doctest::Approx(0.0).epsilon(1e-12));

  auto bad = ref;
  bad.wavenumbers = {10.0, 21.0};
  CHECK_THROWS_AS(nmse_freq(bad, ref), ShapeMismatchError);
}

TEST_CASE("helmholtz_residual constant-field ratio is one") {
  auto f = [](const std::array<double, 3>&) { return cplx(1.0, 0.0); };
  std::vector<std::array<double, 3>> probes = {{0.1, 0.0, 0.0}, {0.0, 0.2, 0.0}};
  CHECK(helmholtz_residual(f, 1.0, probes, 1e-3) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("time_to_freq concentrates a pure bin tone") {
  const int T = 1024;
  const double fs = 16000.0;
  const double df = fs / T;
  const long bin = 40;
  const double f0 = bin * df;
  const auto g = sma::pentakis32_geometry();
  TimeSignalSet sig;
  sig.fs = fs;
  sig.channels = 32;
  sig.length = T;
  sig.samples.resize(static_cast<size_t>(32) * T);
  for (int q = 0; q < 32; ++q)
    for (long t = 0; t < T; ++t)
      sig.at(q, t) = std::cos(kTwoPi * f0 * t / fs + 0.1 * q);

  const auto field = time_to_freq(sig, g, 100.0, 4000.0, 343.0);
  // energy concentrated at the tone's bin (> 99.9%)
  double total = 0.0, at_bin = 0.0;
  const double k0 = kTwoPi * f0 / 343.0;
  for (int j = 0; j < field.bins(); ++j) {
    double e = 0.0;
    for (int q = 0; q < 32; ++q) e += std::norm(field.at(q, j));
    total += e;
    if (std::fabs(field.wavenumbers[j] - k0) < 1e-9) at_bin = e;
  }
  CHECK(at_bin / total > 0.999);

  CHECK_THROWS_AS(time_to_freq(sig, g, 100.0, 9000.0, 343.0), ConfigError);
}

TEST_CASE("time_to_freq / freq_to_time round trip") {
  const auto g = sma::pentakis32_geometry();
  const auto sig = random_signals(32, 512, 16000.0, 9);
  const auto field = time_to_freq(sig, g, 0.0, 8000.0, 343.0);
  const auto back = freq_to_time(field, 16000.0, 512);
  double maxerr = 0.0;
  for (size_t i = 0; i < sig.samples.size(); ++i)
    maxerr = std::max(maxerr, std::fabs(sig.samples[i] - back.samples[i]));
  CHECK(maxerr < 1e-9);

  // zero signal -> all-zero field
  auto zeros = sig;
  std::fill(zeros.samples.begin(), zeros.samples.end(), 0.0);
  const auto zf = time_to_freq(zeros, g, 0.0, 8000.0, 343.0);
  for (const auto& p : zf.pressures) CHECK(std::abs(p) == 0.0);

  // metadata consistency enforced
  CHECK_THROWS_AS(freq_to_time(field, 16000.0, 256), ShapeMismatchError);
  CHECK_THROWS_AS(freq_to_time(field, 8000.0, 512), ShapeMismatchError);
}

TEST_CASE("freq_to_time single bin is a scaled cosine") {
  const auto g = sma::pentakis32_geometry(0.042, specfun::Enclosure::Open);
  sma::ComplexPressureField field;
  field.geometry = g;
  const double fs = 16000.0;
  const long T = 256;
  const long bin = 10;
  const double f0 = bin * fs / T;
  field.medium_c = 343.0;
  field.wavenumbers = {kTwoPi * f0 / 343.0};
  field.pressures.assign(32, cplx(1.0, 0.0));
  const auto sig = freq_to_time(field, fs, T);
  for (long t = 0; t < 16; ++t)
    CHECK(sig.at(0, t) ==
          doctest::Approx(2.0 / T * std::cos(kTwoPi * f0 * t / fs)).epsilon(1e-10));

  // non-pow2 direct path round trip (small)
  TimeSignalSet odd;
  odd.fs = 1000.0;
  odd.channels = 32;
  odd.length = 100;
  odd.samples.resize(3200);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& v : odd.samples) v = u(rng);
  const auto of = time_to_freq(odd, g, 0.0, 500.0, 343.0);
  const auto ob = freq_to_time(of, 1000.0, 100);
  double maxerr = 0.0;
  for (size_t i = 0; i < odd.samples.size(); ++i)
    maxerr = std::max(maxerr, std::fabs(odd.samples[i] - ob.samples[i]));
  CHECK(maxerr < 1e-9);
}
