#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <set>

#include "doctest.h"
#include "spherepinn/geometry.hpp"

using namespace spherepinn;
using namespace spherepinn::sma;

TEST_CASE("pentakis32 layout basics") {
  const auto g = pentakis32_geometry();
  CHECK(g.size() == 32);
  CHECK(g.radius == doctest::Approx(0.042));
  double wsum = 0.0;
  for (double w : g.weights) wsum += w;
  CHECK(wsum == doctest::Approx(kFourPi).epsilon(1e-12));
  // near-uniform: min pairwise angle is the pentakis edge, ~37.4 deg
  double mn = kPi;
  for (int i = 0; i < g.size(); ++i)
    for (int j = i + 1; j < g.size(); ++j)
      mn = std::min(mn, great_circle_angle(g.capsules[i], g.capsules[j]));
  CHECK(mn * 180.0 / kPi == doctest::Approx(37.3774).epsilon(1e-3));
  validate_geometry(g);
}

TEST_CASE("geometry validation rejects bad inputs") {
  auto g = pentakis32_geometry();
  auto bad = g;
  bad.weights[0] += 1e-6;
  CHECK_THROWS_AS(validate_geometry(bad), ConfigError);
  bad = g;
  bad.capsules[1] = bad.capsules[0];
  CHECK_THROWS_AS(validate_geometry(bad), ConfigError);
  bad = g;
  bad.radius = 0.0;
  CHECK_THROWS_AS(validate_geometry(bad), ConfigError);
  bad = g;
  bad.capsules[0].theta = 3.5;
  CHECK_THROWS_AS(validate_geometry(bad), ConfigError);
}

TEST_CASE("coordinate helpers") {
  CHECK(wrap_azimuth(-0.5) == doctest::Approx(kTwoPi - 0.5));
  CHECK(wrap_azimuth(kTwoPi + 0.25) == doctest::Approx(0.25));
  const SphericalCoord s{2.0, 0.7, 1.1};
  const auto back = to_spherical(to_cartesian(s));
  CHECK(back.r == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(back.theta == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(back.phi == doctest::Approx(1.1).epsilon(1e-14));
}

TEST_CASE("subset_select identity and singleton") {
  const auto g = pentakis32_geometry();
  auto [full, idx_full] = subset_select(g, 32);
  CHECK(idx_full.size() == 32);
  for (int i = 0; i < 32; ++i) CHECK(idx_full[i] == i);
  CHECK(full.capsules[5].theta == g.capsules[5].theta);

  auto [one, idx_one] = subset_select(g, 1);
  CHECK(idx_one.size() == 1);
  CHECK(one.weights[0] == doctest::Approx(kFourPi));
}

TEST_CASE("subset_select q=4 finds the inscribed tetrahedron") {
  const auto g = pentakis32_geometry();
  auto [sub, idx] = subset_select(g, 4);
  double mn = kPi;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      mn = std::min(mn, great_circle_angle(sub.capsules[i], sub.capsules[j]));
  const double tetra = std::acos(-1.0 / 3.0);
  CHECK(std::fabs(mn - tetra) * 180.0 / kPi < 5.0);
  double wsum = 0.0;
  for (double w : sub.weights) wsum += w;
  CHECK(wsum == doctest::Approx(kFourPi).epsilon(1e-12));
}

TEST_CASE("subset_select deterministic and valid for all spec sizes") {
  const auto g = pentakis32_geometry();
  for (int q : {4, 9, 16, 25}) {
    auto [sub1, idx1] = subset_select(g, q);
    auto [sub2, idx2] = subset_select(g, q);
    CHECK(idx1 == idx2);
    CHECK(sub1.size() == q);
    std::set<int> uniq(idx1.begin(), idx1.end());
    CHECK(static_cast<int>(uniq.size()) == q);
    validate_geometry(sub1);
  }
  CHECK_THROWS_AS(subset_select(g, 0), std::out_of_range);
  CHECK_THROWS_AS(subset_select(g, 33), std::out_of_range);
}
