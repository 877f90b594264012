#pragma once

// Spherical-harmonics domain processing: truncation-order rules, encoding of
// capsule pressures into SH coefficients, field expansion at arbitrary
// points, and the order-limited SH interpolation baseline upsampler.

#include <cmath>
#include <string>
#include <vector>

#include "spherepinn/common.hpp"
#include "spherepinn/geometry.hpp"
#include "spherepinn/specfun.hpp"

namespace spherepinn::sma {

// Truncated SH coefficients, linear index n^2 + n + m (order-major).
struct ShCoefficients {
  int order = 0;
  double k = 0.0;  // wavenumber, rad/m
  std::vector<cplx> coeffs;

  ShCoefficients() = default;
  ShCoefficients(int order_, double k_)
      : order(order_), k(k_), coeffs((order_ + 1) * (order_ + 1), cplx{}) {}

  cplx& at(int n, int m) { return coeffs[n * n + n + m]; }
  const cplx& at(int n, int m) const { return coeffs[n * n + n + m]; }
};

// Complex pressures over Q capsules and K frequency bins (row-major Q x K).
// time_fs/time_length record the originating DFT grid when the field was
// produced from time-domain signals (0 = not applicable).
struct ComplexPressureField {
  ArrayGeometry geometry;
  std::vector<double> wavenumbers;  // strictly increasing, rad/m
  std::vector<cplx> pressures;      // Q*K, row-major
  double medium_c = 343.0;
  double time_fs = 0.0;
  long time_length = 0;

  int channels() const { return geometry.size(); }
  int bins() const { return static_cast<int>(wavenumbers.size()); }
  cplx& at(int q, int j) { return pressures[static_cast<size_t>(q) * wavenumbers.size() + j]; }
  const cplx& at(int q, int j) const {
    return pressures[static_cast<size_t>(q) * wavenumbers.size() + j];
  }
};

inline void validate_field(const ComplexPressureField& f) {
  validate_geometry(f.geometry);
  if (f.pressures.size() !=
      static_cast<size_t>(f.geometry.size()) * f.wavenumbers.size())
    throw ShapeMismatchError("pressure matrix does not match Q x K");
  for (size_t j = 1; j < f.wavenumbers.size(); ++j)
    if (!(f.wavenumbers[j] > f.wavenumbers[j - 1]))
      throw ConfigError("wavenumbers must be strictly increasing");
  for (const auto& p : f.pressures)
    if (!std::isfinite(p.real()) || !std::isfinite(p.imag()))
      throw ConfigError("non-finite pressure value");
}

// Largest order N resolvable by q_count sampling points: N = floor(sqrt(q)) - 1.
inline int max_order(int q_count) {
  if (q_count < 1) throw std::domain_error("max_order requires q_count >= 1");
  int s = static_cast<int>(std::sqrt(static_cast<double>(q_count)));
  while ((s + 1) * (s + 1) <= q_count) ++s;
  while (s * s > q_count) --s;
  return s - 1;
}

// Smallest order N with negligible aliasing at wavenumber k and radius r.
inline int aliasing_free_order(double k, double r) {
  if (k < 0.0) throw std::domain_error("aliasing_free_order requires k >= 0");
  if (!(r > 0.0)) throw std::domain_error("aliasing_free_order requires r > 0");
  return static_cast<int>(std::ceil(k * r));
}

// Weighting for the encode sum: Quadrature applies the geometry weights w_q
// (making encode a projection on near-uniform layouts); Unit is the literal
// unweighted sum.
enum class EncodeWeighting { Quadrature, Unit };

// C_nm = (1/b_n(kR)) sum_q w_q p(r_q, k) conj(Y_nm(theta_q, phi_q))
inline ShCoefficients sh_encode(const ComplexPressureField& field, int bin,
                                int order,
                                EncodeWeighting weighting = EncodeWeighting::Quadrature) {
  const int q_count = field.geometry.size();
  if (bin < 0 || bin >= field.bins())
    throw std::out_of_range("sh_encode: bin out of range");
  if (order < 0) throw std::domain_error("sh_encode: order must be >= 0");
  if ((order + 1) * (order + 1) > q_count)
    throw OrderTooHighError("sh_encode: (N+1)^2 = " +
                            std::to_string((order + 1) * (order + 1)) +
                            " exceeds Q = " + std::to_string(q_count));
  const double k = field.wavenumbers[bin];
  const double kR = k * field.geometry.radius;

  std::vector<cplx> bn(order + 1);
  for (int n = 0; n <= order; ++n) {
    bn[n] = specfun::radial_term_b(n, kR, field.geometry.enclosure);
    if (std::abs(bn[n]) < 1e-12)
      throw BesselNullError("radial term b_" + std::to_string(n) +
                            "(kR=" + std::to_string(kR) +
                            ") is numerically null");
  }

  ShCoefficients out(order, k);
  for (int n = 0; n <= order; ++n) {
    for (int m = -n; m <= n; ++m) {
      cplx acc{};
      for (int q = 0; q < q_count; ++q) {
        const double w = weighting == EncodeWeighting::Quadrature
                             ? field.geometry.weights[q]
                             : 1.0;
        const auto& c = field.geometry.capsules[q];
        acc += w * field.at(q, bin) *
               std::conj(specfun::sph_harm(n, m, c.theta, c.phi));
      }
      out.at(n, m) = acc / bn[n];
    }
  }
  return out;
}

// Radial factor applied when expanding: FreeField uses j_n(kr);
// MatchEnclosure uses the enclosure radial term (for evaluation on the
// surface of the capturing sphere).
enum class RadialMode { FreeField, MatchEnclosure };

// p(r) = sum_{n<=N} sum_m C_nm * radial_n(kr) * Y_nm(theta, phi)
// For MatchEnclosure on a rigid sphere the scattering is matched at the
// expansion's own radius (on-surface evaluation, kr == kR).
inline cplx sh_expand(const ShCoefficients& coeffs, const SphericalCoord& point,
                      RadialMode radial = RadialMode::FreeField,
                      Enclosure enclosure = Enclosure::Open) {
  if (!(point.r > 0.0)) throw std::domain_error("sh_expand requires point.r > 0");
  const double kr = coeffs.k * point.r;
  cplx acc{};
  for (int n = 0; n <= coeffs.order; ++n) {
    const cplx radial_n = radial == RadialMode::FreeField
                              ? cplx(specfun::sph_bessel_j(n, kr, 0), 0.0)
                              : specfun::radial_term_b(n, kr, enclosure);
    if (radial_n == cplx{}) continue;
    cplx dir{};
    for (int m = -n; m <= n; ++m)
      dir += coeffs.at(n, m) * specfun::sph_harm(n, m, point.theta, point.phi);
    acc += radial_n * dir;
  }
  return acc;
}

// Order-limited SH surface interpolation at N = max_order(Q):
//   p_hat(s) = sum_{n<=N,m} [sum_q w_q p(r_q) conj(Y_nm(q))] Y_nm(s)
// The radial terms of encode and on-surface expansion cancel algebraically,
// so no b_n division is performed (robust at open-sphere nulls).
inline ComplexPressureField baseline_upsample(
    const ComplexPressureField& field, const std::vector<CapsuleDir>& targets,
    int forced_order = -1) {
  const int q_count = field.geometry.size();
  const int order = forced_order >= 0 ? forced_order : max_order(q_count);
  if ((order + 1) * (order + 1) > q_count)
    throw OrderTooHighError("baseline_upsample: forced order too high for Q");
  const int n_coef = (order + 1) * (order + 1);
  const int n_t = static_cast<int>(targets.size());
  const int n_k = field.bins();

  // Y matrices: capsules (Q x n_coef, conjugated, weighted) and targets.
  std::vector<cplx> enc(static_cast<size_t>(q_count) * n_coef);
  std::vector<cplx> dec(static_cast<size_t>(n_t) * n_coef);
  for (int q = 0; q < q_count; ++q) {
    const auto& c = field.geometry.capsules[q];
    const double w = field.geometry.weights[q];
    int idx = 0;
    for (int n = 0; n <= order; ++n)
      for (int m = -n; m <= n; ++m, ++idx)
        enc[static_cast<size_t>(q) * n_coef + idx] =
            w * std::conj(specfun::sph_harm(n, m, c.theta, c.phi));
  }
  for (int t = 0; t < n_t; ++t) {
    int idx = 0;
    for (int n = 0; n <= order; ++n)
      for (int m = -n; m <= n; ++m, ++idx)
        dec[static_cast<size_t>(t) * n_coef + idx] =
            specfun::sph_harm(n, m, targets[t].theta, targets[t].phi);
  }

  ComplexPressureField out;
  out.geometry.radius = field.geometry.radius;
  out.geometry.enclosure = field.geometry.enclosure;
  out.geometry.capsules = targets;
  out.geometry.weights.assign(n_t, kFourPi / std::max(1, n_t));
  out.wavenumbers = field.wavenumbers;
  out.medium_c = field.medium_c;
  out.time_fs = field.time_fs;
  out.time_length = field.time_length;
  out.pressures.assign(static_cast<size_t>(n_t) * n_k, cplx{});

  std::vector<cplx> coef(n_coef);
  for (int j = 0; j < n_k; ++j) {
    std::fill(coef.begin(), coef.end(), cplx{});
    for (int q = 0; q < q_count; ++q) {
      const cplx p = field.at(q, j);
      const cplx* row = &enc[static_cast<size_t>(q) * n_coef];
      for (int i = 0; i < n_coef; ++i) coef[i] += p * row[i];
    }
    for (int t = 0; t < n_t; ++t) {
      const cplx* row = &dec[static_cast<size_t>(t) * n_coef];
      cplx acc{};
      for (int i = 0; i < n_coef; ++i) acc += coef[i] * row[i];
      out.at(t, j) = acc;
    }
  }
  return out;
}

}  // namespace spherepinn::sma
