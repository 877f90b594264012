#pragma once

// Spherical array geometry: capsule directions, quadrature weights, the
// built-in 32-point reference layout, and capsule-subset selection.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "spherepinn/common.hpp"
#include "spherepinn/specfun.hpp"

namespace spherepinn::sma {

using specfun::Enclosure;

struct Medium {
  double c = 343.0;  // speed of sound, m/s
};

struct SphericalCoord {
  double r = 0.0;      // meters
  double theta = 0.0;  // inclination, [0, pi]
  double phi = 0.0;    // azimuth, wrapped to [0, 2pi)
};

struct CapsuleDir {
  double theta = 0.0;
  double phi = 0.0;
};

inline double wrap_azimuth(double phi) {
  double p = std::fmod(phi, kTwoPi);
  if (p < 0.0) p += kTwoPi;
  return p;
}

inline std::array<double, 3> unit_vector(double theta, double phi) {
  const double st = std::sin(theta);
  return {st * std::cos(phi), st * std::sin(phi), std::cos(theta)};
}

inline std::array<double, 3> to_cartesian(const SphericalCoord& s) {
  auto u = unit_vector(s.theta, s.phi);
  return {s.r * u[0], s.r * u[1], s.r * u[2]};
}

inline SphericalCoord to_spherical(const std::array<double, 3>& x) {
  const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
  if (r == 0.0) return {0.0, 0.0, 0.0};
  double ct = x[2] / r;
  ct = std::clamp(ct, -1.0, 1.0);
  return {r, std::acos(ct), wrap_azimuth(std::atan2(x[1], x[0]))};
}

inline double great_circle_angle(const CapsuleDir& a, const CapsuleDir& b) {
  const auto ua = unit_vector(a.theta, a.phi);
  const auto ub = unit_vector(b.theta, b.phi);
  const double d = ua[0] * ub[0] + ua[1] * ub[1] + ua[2] * ub[2];
  return std::acos(std::clamp(d, -1.0, 1.0));
}

struct ArrayGeometry {
  double radius = 0.0;               // meters, > 0
  std::vector<CapsuleDir> capsules;  // ordered
  std::vector<double> weights;       // steradians, sum 4pi
  Enclosure enclosure = Enclosure::Open;

  int size() const { return static_cast<int>(capsules.size()); }
  std::array<double, 3> capsule_unit(int q) const {
    return unit_vector(capsules[q].theta, capsules[q].phi);
  }
  std::array<double, 3> capsule_position(int q) const {
    auto u = capsule_unit(q);
    return {radius * u[0], radius * u[1], radius * u[2]};
  }
};

// Validates the ArrayGeometry invariants; throws ConfigError.
inline void validate_geometry(const ArrayGeometry& g) {
  if (!(g.radius > 0.0)) throw ConfigError("geometry radius must be > 0");
  if (g.capsules.empty()) throw ConfigError("geometry needs >= 1 capsule");
  if (g.weights.size() != g.capsules.size())
    throw ConfigError("geometry weight count must match capsule count");
  double wsum = 0.0;
  for (size_t q = 0; q < g.capsules.size(); ++q) {
    const auto& c = g.capsules[q];
    if (!(c.theta >= 0.0 && c.theta <= kPi))
      throw ConfigError("capsule theta outside [0, pi] at index " +
                        std::to_string(q));
    if (!std::isfinite(c.phi) || !std::isfinite(g.weights[q]))
      throw ConfigError("non-finite capsule entry at index " +
                        std::to_string(q));
    wsum += g.weights[q];
  }
  if (std::fabs(wsum - kFourPi) > 1e-9)
    throw ConfigError("quadrature weights must sum to 4*pi (got " +
                      std::to_string(wsum) + ")");
  for (size_t i = 0; i < g.capsules.size(); ++i)
    for (size_t j = i + 1; j < g.capsules.size(); ++j)
      if (great_circle_angle(g.capsules[i], g.capsules[j]) < 1e-9)
        throw ConfigError("capsules " + std::to_string(i) + " and " +
                          std::to_string(j) + " coincide");
}

namespace detail {

// Icosahedron vertices plus normalized face centroids: the 32 vertices of a
// pentakis dodecahedron. With weights 4pi*25/840 on the 12 vertices and
// 4pi*27/840 on the 20 face centroids this point set integrates spherical
// polynomials exactly up to degree 9 (McLaren's 32-point rule), which makes
// the SH encode/expand pair an exact projection for orders <= 4.
inline void pentakis32_points(std::vector<std::array<double, 3>>* pts,
                              std::vector<double>* w) {
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  std::vector<std::array<double, 3>> ico;
  for (double s1 : {1.0, -1.0})
    for (double s2 : {1.0, -1.0}) {
      ico.push_back({0.0, s1, s2 * phi});
      ico.push_back({s1, s2 * phi, 0.0});
      ico.push_back({s1 * phi, 0.0, s2});
    }
  const double vnorm = std::sqrt(1.0 + phi * phi);
  // Faces = vertex triples with pairwise (unnormalized) dot phi.
  std::vector<std::array<double, 3>> faces;
  for (size_t a = 0; a < ico.size(); ++a)
    for (size_t b = a + 1; b < ico.size(); ++b)
      for (size_t c = b + 1; c < ico.size(); ++c) {
        auto dot = [&](size_t i, size_t j) {
          return ico[i][0] * ico[j][0] + ico[i][1] * ico[j][1] +
                 ico[i][2] * ico[j][2];
        };
        if (std::fabs(dot(a, b) - phi) < 1e-9 &&
            std::fabs(dot(a, c) - phi) < 1e-9 &&
            std::fabs(dot(b, c) - phi) < 1e-9) {
          std::array<double, 3> f = {ico[a][0] + ico[b][0] + ico[c][0],
                                     ico[a][1] + ico[b][1] + ico[c][1],
                                     ico[a][2] + ico[b][2] + ico[c][2]};
          const double n = std::sqrt(f[0] * f[0] + f[1] * f[1] + f[2] * f[2]);
          faces.push_back({f[0] / n, f[1] / n, f[2] / n});
        }
      }
  pts->clear();
  w->clear();
  const double wi = kFourPi * 25.0 / 840.0;
  const double wf = kFourPi * 27.0 / 840.0;
  for (const auto& v : ico) {
    pts->push_back({v[0] / vnorm, v[1] / vnorm, v[2] / vnorm});
    w->push_back(wi);
  }
  for (const auto& f : faces) {
    pts->push_back(f);
    w->push_back(wf);
  }
}

}  // namespace detail

// Built-in 32-capsule near-uniform reference layout (pentakis-dodecahedron
// vertices), ordered by (theta, phi).
inline ArrayGeometry pentakis32_geometry(double radius = 0.042,
                                         Enclosure enc = Enclosure::Rigid) {
  std::vector<std::array<double, 3>> pts;
  std::vector<double> w;
  detail::pentakis32_points(&pts, &w);
  std::vector<int> idx(pts.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  std::vector<SphericalCoord> sph(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) sph[i] = to_spherical(pts[i]);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (sph[a].theta != sph[b].theta) return sph[a].theta < sph[b].theta;
    return sph[a].phi < sph[b].phi;
  });
  ArrayGeometry g;
  g.radius = radius;
  g.enclosure = enc;
  for (int i : idx) {
    g.capsules.push_back({sph[i].theta, sph[i].phi});
    g.weights.push_back(w[i]);
  }
  validate_geometry(g);
  return g;
}

// Deterministic subset of q capsules maximizing the minimum pairwise
// great-circle angle. Exhaustive for q <= 4; otherwise greedy farthest-point
// growth seeded by the exhaustive best pair. Weights renormalized to 4pi.
// Returns the reduced geometry and the selected indices (ascending).
inline std::pair<ArrayGeometry, std::vector<int>> subset_select(
    const ArrayGeometry& geometry, int q) {
  const int n = geometry.size();
  if (q < 1 || q > n)
    throw std::out_of_range("subset_select: q must be in [1, Q]");

  std::vector<int> chosen;
  if (q == n) {
    chosen.resize(n);
    for (int i = 0; i < n; ++i) chosen[i] = i;
  } else if (q == 1) {
    chosen = {0};
  } else {
    std::vector<std::vector<double>> ang(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        ang[i][j] = ang[j][i] =
            great_circle_angle(geometry.capsules[i], geometry.capsules[j]);

    if (q <= 4) {
      double best = -1.0;
      std::vector<int> cand(q);
      std::vector<int> best_set;
      // lexicographic combination enumeration; first maximizer wins
      for (int i = 0; i < q; ++i) cand[i] = i;
      while (true) {
        double mn = kPi + 1.0;
        for (int a = 0; a < q && mn > best; ++a)
          for (int b = a + 1; b < q; ++b) mn = std::min(mn, ang[cand[a]][cand[b]]);
        if (mn > best) {
          best = mn;
          best_set = cand;
        }
        int pos = q - 1;
        while (pos >= 0 && cand[pos] == n - q + pos) --pos;
        if (pos < 0) break;
        ++cand[pos];
        for (int k = pos + 1; k < q; ++k) cand[k] = cand[k - 1] + 1;
      }
      chosen = best_set;
    } else {
      int bi = 0, bj = 1;
      double best = -1.0;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (ang[i][j] > best) {
            best = ang[i][j];
            bi = i;
            bj = j;
          }
      chosen = {bi, bj};
      std::vector<bool> in(n, false);
      in[bi] = in[bj] = true;
      while (static_cast<int>(chosen.size()) < q) {
        int arg = -1;
        double bestmin = -1.0;
        for (int c = 0; c < n; ++c) {
          if (in[c]) continue;
          double mn = kPi + 1.0;
          for (int s : chosen) mn = std::min(mn, ang[c][s]);
          if (mn > bestmin) {
            bestmin = mn;
            arg = c;
          }
        }
        chosen.push_back(arg);
        in[arg] = true;
      }
      std::sort(chosen.begin(), chosen.end());
    }
  }

  ArrayGeometry sub;
  sub.radius = geometry.radius;
  sub.enclosure = geometry.enclosure;
  double wsum = 0.0;
  for (int i : chosen) wsum += geometry.weights[i];
  for (int i : chosen) {
    sub.capsules.push_back(geometry.capsules[i]);
    sub.weights.push_back(geometry.weights[i] * kFourPi / wsum);
  }
  return {std::move(sub), std::move(chosen)};
}

}  // namespace spherepinn::sma
