#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "spherepinn/sh_transform.hpp"

using namespace spherepinn;
using namespace spherepinn::sma;
using specfun::Enclosure;
using specfun::radial_term_b;
using specfun::sph_harm;

namespace {

// Field whose pressures are an exact order-limited expansion on the surface:
// p(r_q) = sum_nm C_nm b_n(kR) Y_nm(q). Returns the field and coefficients.
ComplexPressureField band_limited_field(const ArrayGeometry& g, double k,
                                        const ShCoefficients& c) {
  ComplexPressureField f;
  f.geometry = g;
  f.wavenumbers = {k};
  f.pressures.assign(g.size(), cplx{});
  const double kR = k * g.radius;
  for (int q = 0; q < g.size(); ++q) {
    cplx acc{};
    for (int n = 0; n <= c.order; ++n) {
      const cplx bn = radial_term_b(n, kR, g.enclosure);
      for (int m = -n; m <= n; ++m)
        acc += c.at(n, m) * bn *
               sph_harm(n, m, g.capsules[q].theta, g.capsules[q].phi);
    }
    f.at(q, 0) = acc;
  }
  return f;
}

ShCoefficients random_coeffs(int order, double k, unsigned seed) {
  ShCoefficients c(order, k);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& v : c.coeffs) v = cplx(u(rng), u(rng));
  return c;
}

}  // namespace

TEST_CASE("max_order") {
  CHECK(max_order(4) == 1);
  CHECK(max_order(9) == 2);
  CHECK(max_order(16) == 3);
  CHECK(max_order(25) == 4);
  CHECK(max_order(1) == 0);
  CHECK(max_order(32) == 4);
  CHECK(max_order(3) == 0);
  CHECK_THROWS_AS(max_order(0), std::domain_error);
}

TEST_CASE("aliasing_free_order") {
  CHECK(aliasing_free_order(0.0, 0.042) == 0);
  CHECK(aliasing_free_order(100.0, 0.05) == 5);
  CHECK(aliasing_free_order(100.0, 0.042) == 5);
  CHECK_THROWS_AS(aliasing_free_order(-1.0, 0.042), std::domain_error);
  CHECK_THROWS_AS(aliasing_free_order(1.0, 0.0), std::domain_error);
}

TEST_CASE("sh_encode constant field gives only C_00") {
  const auto g = pentakis32_geometry(0.042, Enclosure::Rigid);
  const double k = 40.0;  // kR = 1.68
  ComplexPressureField f;
  f.geometry = g;
  f.wavenumbers = {k};
  f.pressures.assign(32, cplx(1.0, 0.0));

  const auto c0 = sh_encode(f, 0, 0);
  const cplx b0 = radial_term_b(0, k * g.radius, Enclosure::Rigid);
  const cplx expect = std::sqrt(kFourPi) / b0;
  CHECK(std::abs(c0.at(0, 0) - expect) < 1e-9);

  const auto c4 = sh_encode(f, 0, 4);
  for (int n = 1; n <= 4; ++n)
    for (int m = -n; m <= n; ++m) CHECK(std::abs(c4.at(n, m)) < 1e-6);
}

TEST_CASE("sh_encode recovers a pure mode") {
  const auto g = pentakis32_geometry(0.042, Enclosure::Rigid);
  const double k = 50.0;
  ShCoefficients in(1, k);
  in.at(1, 0) = cplx(1.0, 0.0);
  const auto f = band_limited_field(g, k, in);
  const auto out = sh_encode(f, 0, 1);
  CHECK(std::abs(out.at(1, 0) - cplx(1.0, 0.0)) < 1e-6);
  CHECK(std::abs(out.at(0, 0)) < 1e-6);
  CHECK(std::abs(out.at(1, -1)) < 1e-6);
  CHECK(std::abs(out.at(1, 1)) < 1e-6);
}

TEST_CASE("sh_encode unit-weight mode is the literal unweighted sum") {
  const auto g = pentakis32_geometry(0.042, Enclosure::Rigid);
  const double k = 40.0;
  ComplexPressureField f;
  f.geometry = g;
  f.wavenumbers = {k};
  f.pressures.assign(32, cplx(1.0, 0.0));
  const auto quad = sh_encode(f, 0, 0, EncodeWeighting::Quadrature);
  const auto unit = sh_encode(f, 0, 0, EncodeWeighting::Unit);
  // for the constant field the two modes differ exactly by Q / (4 pi)
  const cplx expect = quad.at(0, 0) * (32.0 / kFourPi);
  CHECK(std::abs(unit.at(0, 0) - expect) < 1e-12 * std::abs(expect));
  // and the unweighted sum is not a projection: it differs from quadrature
  CHECK(std::abs(unit.at(0, 0) - quad.at(0, 0)) > 1.0);
}

TEST_CASE("sh_encode error paths") {
  const auto g = pentakis32_geometry();
  ComplexPressureField f;
  f.geometry = g;
  f.wavenumbers = {10.0};
  f.pressures.assign(32, cplx(1.0, 0.0));
  CHECK_THROWS_AS(sh_encode(f, 0, 5), OrderTooHighError);

  // open sphere at a j_0 null: kR = pi
  auto open_g = pentakis32_geometry(0.042, Enclosure::Open);
  ComplexPressureField f2;
  f2.geometry = open_g;
  f2.wavenumbers = {kPi / 0.042};
  f2.pressures.assign(32, cplx(1.0, 0.0));
  CHECK_THROWS_AS(sh_encode(f2, 0, 0), BesselNullError);
}

TEST_CASE("sh_expand single coefficient reduces to j_0") {
  ShCoefficients c(0, 2.0);
  c.at(0, 0) = std::sqrt(kFourPi);
  for (double r : {0.25, 0.5, 1.0}) {
    const cplx v = sh_expand(c, {r, 1.0, 2.0}, RadialMode::FreeField);
    CHECK(std::abs(v - cplx(specfun::sph_bessel_j(0, 2.0 * r, 0), 0)) < 1e-14);
  }
  ShCoefficients z(3, 2.0);
  CHECK(std::abs(sh_expand(z, {0.5, 0.3, 0.3})) == 0.0);
  CHECK_THROWS_AS(sh_expand(c, {0.0, 0.0, 0.0}), std::domain_error);
}

TEST_CASE("encode-expand round trip on band-limited fields") {
  // Acceptance-style: order N <= 4 on the 32-capsule layout, relative error
  // at capsule positions < 1e-6.
  const auto g = pentakis32_geometry(0.042, Enclosure::Rigid);
  for (int order : {1, 2, 3, 4}) {
    const double k = 30.0 + 10.0 * order;
    const auto in = random_coeffs(order, k, 100 + order);
    const auto f = band_limited_field(g, k, in);
    const auto got = sh_encode(f, 0, order);
    double maxc = 0.0;
    for (size_t i = 0; i < in.coeffs.size(); ++i)
      maxc = std::max(maxc, std::abs(got.coeffs[i] - in.coeffs[i]));
    CHECK(maxc < 1e-8);

    // re-expand on the surface with the enclosure radial term
    double max_rel = 0.0;
    for (int q = 0; q < g.size(); ++q) {
      const cplx v =
          sh_expand(got, {g.radius, g.capsules[q].theta, g.capsules[q].phi},
                    RadialMode::MatchEnclosure, g.enclosure);
      max_rel += 0.0;
      const double denom = std::max(std::abs(f.at(q, 0)), 1e-12);
      max_rel = std::max(max_rel, std::abs(v - f.at(q, 0)) / denom);
    }
    CHECK(max_rel < 1e-6);
  }
}

TEST_CASE("baseline_upsample reproduces representable fields") {
  const auto g = pentakis32_geometry(0.042, Enclosure::Rigid);
  const double k = 55.0;
  const auto in = random_coeffs(4, k, 42);
  const auto f = band_limited_field(g, k, in);

  // at the capsules themselves
  auto self = baseline_upsample(f, g.capsules);
  double max_rel = 0.0;
  for (int q = 0; q < 32; ++q) {
    const double denom = std::max(std::abs(f.at(q, 0)), 1e-12);
    max_rel = std::max(max_rel, std::abs(self.at(q, 0) - f.at(q, 0)) / denom);
  }
  CHECK(max_rel < 1e-6);

  // constant field at fresh directions
  ComplexPressureField ones;
  ones.geometry = g;
  ones.wavenumbers = {k};
  ones.pressures.assign(32, cplx(1.0, 0.0));
  std::vector<CapsuleDir> targets = {{0.3, 0.4}, {1.2, 5.9}, {2.8, 3.3}};
  auto est = baseline_upsample(ones, targets);
  for (int t = 0; t < 3; ++t)
    CHECK(std::abs(est.at(t, 0) - cplx(1.0, 0.0)) < 1e-6);
}

TEST_CASE("baseline_upsample is linear in the input pressures") {
  const auto g = pentakis32_geometry();
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ComplexPressureField f1, f2;
  f1.geometry = f2.geometry = g;
  f1.wavenumbers = f2.wavenumbers = {20.0, 60.0};
  f1.pressures.resize(64);
  f2.pressures.resize(64);
  for (auto& p : f1.pressures) p = cplx(u(rng), u(rng));
  for (auto& p : f2.pressures) p = cplx(u(rng), u(rng));
  const cplx a(1.7, -0.3), b(-0.6, 0.9);

  ComplexPressureField fc = f1;
  for (size_t i = 0; i < fc.pressures.size(); ++i)
    fc.pressures[i] = a * f1.pressures[i] + b * f2.pressures[i];

  std::vector<CapsuleDir> targets = {{0.9, 0.1}, {2.0, 4.0}};
  auto e1 = baseline_upsample(f1, targets);
  auto e2 = baseline_upsample(f2, targets);
  auto ec = baseline_upsample(fc, targets);
  for (int t = 0; t < 2; ++t)
    for (int j = 0; j < 2; ++j)
      CHECK(std::abs(ec.at(t, j) - (a * e1.at(t, j) + b * e2.at(t, j))) <
            1e-10);
}

TEST_CASE("baseline_upsample invariant under joint rotation") {
  // rotate capsules and targets jointly about z; output must match
  const auto g = pentakis32_geometry();
  const double rot = 0.77;
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  ComplexPressureField f;
  f.geometry = g;
  f.wavenumbers = {30.0};
  f.pressures.resize(32);
  for (auto& p : f.pressures) p = cplx(u(rng), u(rng));

  ArrayGeometry gr = g;
  for (auto& c : gr.capsules) c.phi = wrap_azimuth(c.phi + rot);
  ComplexPressureField fr = f;
  fr.geometry = gr;

  std::vector<CapsuleDir> targets = {{0.4, 1.0}, {1.9, 2.5}, {2.6, 0.2}};
  std::vector<CapsuleDir> targets_r = targets;
  for (auto& t : targets_r) t.phi = wrap_azimuth(t.phi + rot);

  auto est = baseline_upsample(f, targets, 2);
  auto est_r = baseline_upsample(fr, targets_r, 2);
  for (int t = 0; t < 3; ++t)
    CHECK(std::abs(est.at(t, 0) - est_r.at(t, 0)) < 1e-6);
}

TEST_CASE("field validation") {
  const auto g = pentakis32_geometry();
  ComplexPressureField f;
  f.geometry = g;
  f.wavenumbers = {10.0, 5.0};
  f.pressures.assign(64, cplx{});
  CHECK_THROWS_AS(validate_field(f), ConfigError);  // non-increasing k
  f.wavenumbers = {5.0, 10.0};
  f.pressures.assign(63, cplx{});
  CHECK_THROWS_AS(validate_field(f), ShapeMismatchError);
}
