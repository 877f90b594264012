#pragma once

// Scalar special functions for spherical acoustics: associated Legendre,
// spherical Bessel/Neumann/Hankel functions with derivatives, complex
// spherical harmonics, and the enclosure-dependent radial term b_n.
//
// Conventions:
//  - assoc_legendre includes the Condon-Shortley phase (-1)^m, so the
//    symmetry Y_{n,-m} = (-1)^m conj(Y_{nm}) holds as written.
//  - All functions are pure and thread-safe.

#include <cmath>
#include <stdexcept>
#include <string>

#include "spherepinn/common.hpp"

namespace spherepinn::specfun {

// Recurrences are validated up to this order only.
inline constexpr int kMaxOrder = 30;

enum class Enclosure { Open, Rigid };

inline const char* enclosure_name(Enclosure e) {
  return e == Enclosure::Open ? "open" : "rigid";
}

namespace detail {

inline void check_order(int n) {
  if (n < 0) throw std::domain_error("order n must be >= 0");
  if (n > kMaxOrder)
    throw std::domain_error("order n=" + std::to_string(n) +
                            " above supported maximum " +
                            std::to_string(kMaxOrder));
}

// (2n+1)!! as double; exact up to n=30 range is not representable but the
// rounding error is < 1 ulp per factor which is enough downstream.
inline double double_factorial_odd(int n) {
  double p = 1.0;
  for (int k = 1; k <= 2 * n + 1; k += 2) p *= static_cast<double>(k);
  return p;
}

// Ascending series for j_n and its derivative, three terms. Valid for
// small arguments where the quotient forms would lose digits.
inline void sph_jn_series(int n, double x, double* jn, double* djn) {
  const double y = 0.5 * x * x;
  const double dfac = double_factorial_odd(n);
  const double t1 = 1.0 / (2.0 * n + 3.0);
  const double t2 = 1.0 / (2.0 * (2.0 * n + 3.0) * (2.0 * n + 5.0));
  const double xn = std::pow(x, n);
  *jn = xn / dfac * (1.0 - y * t1 + y * y * t2);
  if (djn) {
    // d/dx [x^n (1 - y t1 + y^2 t2)] with y = x^2/2
    const double xnm1 = n == 0 ? 0.0 : std::pow(x, n - 1);
    const double d = n * xnm1 * (1.0 - y * t1 + y * y * t2) +
                     xn * (-x * t1 + 2.0 * y * x * t2);
    *djn = d / dfac;
  }
}

// (sin x - x cos x)/x^2 cancels catastrophically for small x; switch to the
// ascending series there.
inline double sph_j1_stable(double x) {
  if (x < 0.02) {
    const double y = 0.5 * x * x;
    return x / 3.0 * (1.0 - y / 5.0 + y * y / 70.0);
  }
  return (std::sin(x) - x * std::cos(x)) / (x * x);
}

// j_n and j_{n-1} together (j_{-1} reported as cos(x)/x).
// Regimes: closed forms for n<=1; ascending series for tiny x; upward
// recurrence for x >= n (oscillatory regime, stable); Miller downward
// recurrence otherwise. Pure upward recurrence is unstable for n > x:
// the error grows like y_n, which destroys j_n for kR well below n.
inline void sph_jn_pair(int n, double x, double* jn, double* jnm1) {
  if (x == 0.0) {
    *jn = (n == 0) ? 1.0 : 0.0;
    if (jnm1) *jnm1 = (n == 1) ? 1.0 : (n == 0 ? 0.0 : 0.0);
    // j_{-1}(0) is singular; callers never use it since deriv at 0 is
    // special-cased. Report 0 for n==0.
    return;
  }
  const double j0 = std::sin(x) / x;
  const double j1 = sph_j1_stable(x);
  if (n == 0) {
    *jn = j0;
    if (jnm1) *jnm1 = std::cos(x) / x;  // j_{-1}
    return;
  }
  if (n == 1) {
    *jn = j1;
    if (jnm1) *jnm1 = j0;
    return;
  }
  if (x < 1e-4) {
    sph_jn_series(n, x, jn, nullptr);
    if (jnm1) sph_jn_series(n - 1, x, jnm1, nullptr);
    return;
  }
  if (x >= static_cast<double>(n)) {
    double jm = j0, jc = j1;
    for (int k = 1; k < n; ++k) {
      const double jp = (2.0 * k + 1.0) / x * jc - jm;
      jm = jc;
      jc = jp;
    }
    *jn = jc;
    if (jnm1) *jnm1 = jm;
    return;
  }
  // Miller downward recurrence, normalized against j0 or j1.
  const int start = n + 40;
  double jp = 0.0;
  double jc = 1e-280;
  double save_n = 0.0, save_nm1 = 0.0, save_1 = 0.0, save_0 = 0.0;
  if (start == n) save_n = jc;
  for (int k = start; k >= 1; --k) {
    double jm = (2.0 * k + 1.0) / x * jc - jp;
    jp = jc;
    jc = jm;
    const int idx = k - 1;
    if (idx == n) save_n = jc;
    if (idx == n - 1) save_nm1 = jc;
    if (idx == 1) save_1 = jc;
    if (idx == 0) save_0 = jc;
    if (std::fabs(jc) > 1e250) {
      const double s = 1e-250;
      jc *= s;
      jp *= s;
      save_n *= s;
      save_nm1 *= s;
      save_1 *= s;
      save_0 *= s;
    }
  }
  const double scale =
      std::fabs(j0) > 0.05 ? j0 / save_0 : j1 / save_1;
  *jn = save_n * scale;
  if (jnm1) *jnm1 = save_nm1 * scale;
}

// y_n and y_{n-1}; upward recurrence is stable for y at all arguments.
inline void sph_yn_pair(int n, double x, double* yn, double* ynm1) {
  const double y0 = -std::cos(x) / x;
  const double y1 = -std::cos(x) / (x * x) - std::sin(x) / x;
  if (n == 0) {
    *yn = y0;
    if (ynm1) *ynm1 = std::sin(x) / x;  // y_{-1} = j_0 shifted convention
    return;
  }
  if (n == 1) {
    *yn = y1;
    if (ynm1) *ynm1 = y0;
    return;
  }
  double ym = y0, yc = y1;
  for (int k = 1; k < n; ++k) {
    const double yp = (2.0 * k + 1.0) / x * yc - ym;
    ym = yc;
    yc = yp;
  }
  *yn = yc;
  if (ynm1) *ynm1 = ym;
}

}  // namespace detail

// Associated Legendre P_nm(x) with Condon-Shortley phase, 0 <= m <= n.
inline double assoc_legendre(int n, int m, double x) {
  detail::check_order(n);
  if (m < 0 || m > n)
    throw std::domain_error("assoc_legendre requires 0 <= m <= n");
  if (std::fabs(x) > 1.0)
    throw std::domain_error("assoc_legendre requires |x| <= 1");
  double pmm = 1.0;
  if (m > 0) {
    const double somx2 = std::sqrt((1.0 - x) * (1.0 + x));
    double fact = 1.0;
    for (int i = 0; i < m; ++i) {
      pmm *= -fact * somx2;  // Condon-Shortley
      fact += 2.0;
    }
  }
  if (n == m) return pmm;
  double pmmp1 = x * (2.0 * m + 1.0) * pmm;
  if (n == m + 1) return pmmp1;
  double pnm = 0.0;
  for (int nn = m + 2; nn <= n; ++nn) {
    pnm = (x * (2.0 * nn - 1.0) * pmmp1 - (nn + m - 1.0) * pmm) /
          static_cast<double>(nn - m);
    pmm = pmmp1;
    pmmp1 = pnm;
  }
  return pnm;
}

// Orthonormal complex spherical harmonic Y_nm(theta, phi), |m| <= n.
// Negative m via Y_{n,-m} = (-1)^m conj(Y_{nm}).
inline cplx sph_harm(int n, int m, double theta, double phi) {
  detail::check_order(n);
  const int mm = m < 0 ? -m : m;
  if (mm > n) throw std::domain_error("sph_harm requires |m| <= n");
  double ratio = 1.0;  // (n-|m|)! / (n+|m|)!
  for (int k = n - mm + 1; k <= n + mm; ++k) ratio /= static_cast<double>(k);
  const double norm = std::sqrt((2.0 * n + 1.0) / kFourPi * ratio);
  const double p = assoc_legendre(n, mm, std::cos(theta));
  cplx v = norm * p * std::polar(1.0, mm * phi);
  if (m < 0) {
    v = std::conj(v);
    if (mm % 2 != 0) v = -v;
  }
  return v;
}

// Spherical Bessel j_n(x) (deriv=0) or j_n'(x) (deriv=1), x >= 0.
inline double sph_bessel_j(int n, double x, int deriv = 0) {
  detail::check_order(n);
  if (x < 0.0) throw std::domain_error("sph_bessel_j requires x >= 0");
  if (deriv != 0 && deriv != 1)
    throw std::domain_error("sph_bessel_j deriv must be 0 or 1");
  if (deriv == 0) {
    double jn;
    detail::sph_jn_pair(n, x, &jn, nullptr);
    return jn;
  }
  if (x == 0.0) return n == 1 ? 1.0 / 3.0 : 0.0;
  if (n == 0) return -detail::sph_j1_stable(x);  // j_0' = -j_1
  if (x < 1e-4) {
    double jn, djn;
    detail::sph_jn_series(n, x, &jn, &djn);
    return djn;
  }
  double jn, jnm1;
  detail::sph_jn_pair(n, x, &jn, &jnm1);
  return jnm1 - (n + 1.0) / x * jn;
}

// Spherical Neumann y_n(x) (deriv=0) or y_n'(x) (deriv=1), x > 0.
inline double sph_bessel_y(int n, double x, int deriv = 0) {
  detail::check_order(n);
  if (x <= 0.0) throw std::domain_error("sph_bessel_y requires x > 0");
  if (deriv != 0 && deriv != 1)
    throw std::domain_error("sph_bessel_y deriv must be 0 or 1");
  double yn, ynm1;
  detail::sph_yn_pair(n, x, &yn, &ynm1);
  if (deriv == 0) return yn;
  if (n == 0) return -(-std::cos(x) / (x * x) - std::sin(x) / x);  // -y_1
  return ynm1 - (n + 1.0) / x * yn;
}

// Spherical Hankel function of the first kind h_n = j_n + i y_n.
inline cplx sph_hankel1(int n, double x, int deriv = 0) {
  if (x <= 0.0)
    throw std::domain_error("sph_hankel1 is singular at x = 0; requires x > 0");
  return {sph_bessel_j(n, x, deriv), sph_bessel_y(n, x, deriv)};
}

// Radial factor coupling SH coefficients to surface pressure, evaluated at
// kr with the rigid-sphere scattering matched at the surface kR:
//   Open:  j_n(kr)
//   Rigid: j_n(kr) - (j_n'(kR)/h_n'(kR)) h_n(kr)
// radial_term_b(n, x, enc) below is the on-surface case kr == kR.
inline cplx radial_term_b_at(int n, double kr, double kR, Enclosure enc) {
  if (enc == Enclosure::Open) return {sph_bessel_j(n, kr, 0), 0.0};
  if (kR <= 0.0 || kr <= 0.0)
    throw std::domain_error("rigid radial term requires kr, kR > 0");
  const double djR = sph_bessel_j(n, kR, 1);
  const cplx dhR = sph_hankel1(n, kR, 1);
  const cplx h = sph_hankel1(n, kr, 0);
  return cplx(sph_bessel_j(n, kr, 0), 0.0) - (djR / dhR) * h;
}

inline cplx radial_term_b(int n, double kR, Enclosure enc) {
  if (enc == Enclosure::Open) {
    if (kR < 0.0) throw std::domain_error("open radial term requires kR >= 0");
    return {sph_bessel_j(n, kR, 0), 0.0};
  }
  return radial_term_b_at(n, kR, kR, enc);
}

// i^n as an exact complex unit.
inline cplx unit_imag_pow(int n) {
  switch (((n % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

}  // namespace spherepinn::specfun
