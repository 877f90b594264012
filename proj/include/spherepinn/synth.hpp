#pragma once

// Ground-truth sound-field synthesis: analytic plane-wave fields on open and
// rigid spheres, free-space point sources, shoebox image-source models (both
// a frequency response and a broadband fractional-delay RIR), and seeded
// noise injection.

#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "spherepinn/common.hpp"
#include "spherepinn/evalkit_types.hpp"
#include "spherepinn/sh_transform.hpp"

namespace spherepinn::synth {

using sma::ArrayGeometry;
using sma::CapsuleDir;
using sma::ComplexPressureField;
using sma::Medium;
using sma::SphericalCoord;
using specfun::Enclosure;

struct PlaneWaveSpec {
  CapsuleDir direction;  // propagation direction
  cplx amplitude{1.0, 0.0};
};

struct PointSourceSpec {
  std::array<double, 3> position{};  // Cartesian meters, outside the sphere
  cplx amplitude{1.0, 0.0};
};

struct ShoeboxSpec {
  std::array<double, 3> dimensions{6.0, 4.0, 3.0};
  std::array<double, 3> source{1.2, 2.3, 1.6};
  std::array<double, 3> array_center{3.5, 2.0, 1.3};
  int reflection_order = 2;
  double wall_reflection_coeff = 0.7;
  double fs = 16000.0;
  long length = 4096;
};

// Plane-wave pressure at an arbitrary point (r >= R for rigid spheres):
//   p(r) = A sum_n i^n (2n+1) b_n(kr; kR) P_n(dir . r_hat)
// which collapses the order-m sum through the addition theorem. For open
// spheres this equals A e^{i k . r} up to truncation.
inline cplx plane_wave_pressure(const PlaneWaveSpec& spec, double sphere_radius,
                                Enclosure enc, double k,
                                const SphericalCoord& point, int truncation) {
  if (k < 0.0) throw std::domain_error("plane wave requires k >= 0");
  if (enc == Enclosure::Rigid && point.r < sphere_radius - 1e-12)
    throw std::domain_error("rigid-sphere field is exterior: r >= R required");
  const double kr = k * point.r;
  if (kr == 0.0) return spec.amplitude;  // only the n=0 term survives
  const auto d = sma::unit_vector(spec.direction.theta, spec.direction.phi);
  const auto u = sma::unit_vector(point.theta, point.phi);
  const double cosg =
      std::clamp(d[0] * u[0] + d[1] * u[1] + d[2] * u[2], -1.0, 1.0);
  const double kR = k * sphere_radius;
  cplx acc{};
  for (int n = 0; n <= truncation; ++n) {
    const cplx bn = enc == Enclosure::Open
                        ? cplx(specfun::sph_bessel_j(n, kr, 0), 0.0)
                        : specfun::radial_term_b_at(n, kr, kR, enc);
    acc += specfun::unit_imag_pow(n) * (2.0 * n + 1.0) * bn *
           specfun::assoc_legendre(n, 0, cosg);
  }
  return spec.amplitude * acc;
}

// Plane-wave pressure at every capsule of the array (surface evaluation).
// Default truncation: ceil(kR) + 12 (series tail decays super-exponentially
// past kR).
inline std::vector<cplx> plane_wave_field(const PlaneWaveSpec& spec,
                                          const ArrayGeometry& geometry,
                                          double k, int truncation = -1) {
  const double kR = k * geometry.radius;
  const int trunc =
      truncation >= 0 ? truncation : static_cast<int>(std::ceil(kR)) + 12;
  if (trunc > specfun::kMaxOrder)
    throw std::domain_error("plane_wave_field: truncation " +
                            std::to_string(trunc) + " above supported order");
  std::vector<cplx> out(geometry.size());
  for (int q = 0; q < geometry.size(); ++q)
    out[q] = plane_wave_pressure(
        spec, geometry.radius, geometry.enclosure, k,
        {geometry.radius, geometry.capsules[q].theta, geometry.capsules[q].phi},
        trunc);
  return out;
}

// Free-space Green's function source: p(r_q) = A e^{ikd}/(4 pi d).
// Open enclosures only (rigid scattering of point sources is unsupported).
inline std::vector<cplx> point_source_field(const PointSourceSpec& spec,
                                            const ArrayGeometry& geometry,
                                            double k) {
  if (geometry.enclosure != Enclosure::Open)
    throw EnclosureUnsupportedError(
        "point_source_field supports open enclosures only");
  const double src_r = std::sqrt(spec.position[0] * spec.position[0] +
                                 spec.position[1] * spec.position[1] +
                                 spec.position[2] * spec.position[2]);
  if (src_r <= geometry.radius)
    throw SynthesisError("point source must lie strictly outside the sphere");
  std::vector<cplx> out(geometry.size());
  for (int q = 0; q < geometry.size(); ++q) {
    const auto p = geometry.capsule_position(q);
    const double d = std::sqrt((p[0] - spec.position[0]) * (p[0] - spec.position[0]) +
                               (p[1] - spec.position[1]) * (p[1] - spec.position[1]) +
                               (p[2] - spec.position[2]) * (p[2] - spec.position[2]));
    out[q] = spec.amplitude * std::polar(1.0, k * d) / (kFourPi * d);
  }
  return out;
}

namespace detail {

struct ImageSource {
  std::array<double, 3> position;
  int bounces;
};

// Shoebox image sources up to the given total reflection order, enumerated
// in a fixed deterministic order.
inline std::vector<ImageSource> image_sources(const ShoeboxSpec& spec) {
  if (spec.reflection_order < 0 || spec.reflection_order > 6)
    throw SynthesisError("reflection_order must be in [0, 6]");
  for (int c = 0; c < 3; ++c) {
    if (!(spec.source[c] > 0.0 && spec.source[c] < spec.dimensions[c]))
      throw SynthesisError("source outside the room");
  }
  std::vector<ImageSource> images;
  const int R = spec.reflection_order;
  const int grid = (R + 2) / 2 + 1;
  for (int nx = -grid; nx <= grid; ++nx)
    for (int ny = -grid; ny <= grid; ++ny)
      for (int nz = -grid; nz <= grid; ++nz)
        for (int ux = 0; ux <= 1; ++ux)
          for (int uy = 0; uy <= 1; ++uy)
            for (int uz = 0; uz <= 1; ++uz) {
              const int bounces = std::abs(nx - ux) + std::abs(nx) +
                                  std::abs(ny - uy) + std::abs(ny) +
                                  std::abs(nz - uz) + std::abs(nz);
              if (bounces > R) continue;
              const double x = (1 - 2 * ux) * spec.source[0] +
                               2.0 * nx * spec.dimensions[0];
              const double y = (1 - 2 * uy) * spec.source[1] +
                               2.0 * ny * spec.dimensions[1];
              const double z = (1 - 2 * uz) * spec.source[2] +
                               2.0 * nz * spec.dimensions[2];
              images.push_back({{x, y, z}, bounces});
            }
  return images;
}

inline void check_array_in_room(const ShoeboxSpec& spec, double radius) {
  for (int c = 0; c < 3; ++c)
    if (!(spec.array_center[c] - radius > 0.0 &&
          spec.array_center[c] + radius < spec.dimensions[c]))
      throw SynthesisError("array does not fit inside the room");
}

}  // namespace detail

// Frequency response of the shoebox image-source model at the given
// wavenumbers: each bin is a sum of free-space Green's functions, so the
// per-bin field satisfies the Helmholtz equation exactly.
inline ComplexPressureField shoebox_field(const ShoeboxSpec& spec,
                                          const ArrayGeometry& geometry,
                                          const std::vector<double>& wavenumbers,
                                          const Medium& medium = {}) {
  detail::check_array_in_room(spec, geometry.radius);
  const auto images = detail::image_sources(spec);
  ComplexPressureField field;
  field.geometry = geometry;
  field.wavenumbers = wavenumbers;
  field.medium_c = medium.c;
  field.pressures.assign(
      static_cast<size_t>(geometry.size()) * wavenumbers.size(), cplx{});
  for (int q = 0; q < geometry.size(); ++q) {
    const auto u = geometry.capsule_position(q);
    const std::array<double, 3> cap = {spec.array_center[0] + u[0],
                                       spec.array_center[1] + u[1],
                                       spec.array_center[2] + u[2]};
    for (const auto& img : images) {
      const double dx = cap[0] - img.position[0];
      const double dy = cap[1] - img.position[1];
      const double dz = cap[2] - img.position[2];
      const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
      const double amp =
          std::pow(spec.wall_reflection_coeff, img.bounces) / (kFourPi * d);
      for (size_t j = 0; j < wavenumbers.size(); ++j)
        field.at(q, static_cast<int>(j)) +=
            amp * std::polar(1.0, wavenumbers[j] * d);
    }
  }
  return field;
}

// Broadband RIR-like signals: image-source sum with a windowed-sinc
// fractional-delay kernel (81 taps, Hann window). Open-sphere model.
inline evalkit::TimeSignalSet image_source_rir(const ShoeboxSpec& spec,
                                               const ArrayGeometry& geometry,
                                               const Medium& medium = {}) {
  detail::check_array_in_room(spec, geometry.radius);
  if (!(spec.fs > 0.0) || spec.length < 1)
    throw SynthesisError("image_source_rir: fs > 0 and length >= 1 required");
  const auto images = detail::image_sources(spec);
  evalkit::TimeSignalSet out;
  out.fs = spec.fs;
  out.channels = geometry.size();
  out.length = spec.length;
  out.samples.assign(static_cast<size_t>(out.channels) * out.length, 0.0);

  constexpr int kTaps = 81;
  constexpr int kHalf = kTaps / 2;
  auto sinc = [](double x) {
    if (x == 0.0) return 1.0;
    const double px = kPi * x;
    return std::sin(px) / px;
  };

  for (int q = 0; q < geometry.size(); ++q) {
    const auto u = geometry.capsule_position(q);
    const std::array<double, 3> cap = {spec.array_center[0] + u[0],
                                       spec.array_center[1] + u[1],
                                       spec.array_center[2] + u[2]};
    double* chan = out.channel(q);
    for (const auto& img : images) {
      const double dx = cap[0] - img.position[0];
      const double dy = cap[1] - img.position[1];
      const double dz = cap[2] - img.position[2];
      const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
      const double amp =
          std::pow(spec.wall_reflection_coeff, img.bounces) / (kFourPi * d);
      const double tau = d / medium.c * spec.fs;
      const long center = std::lround(tau);
      if (center - kHalf >= out.length) continue;
      for (long i = std::max(0l, center - kHalf);
           i <= std::min(out.length - 1, center + kHalf); ++i) {
        const double x = static_cast<double>(i) - tau;
        const double win = 0.5 * (1.0 + std::cos(kPi * x / (kHalf + 0.5)));
        chan[i] += amp * sinc(x) * win;
      }
    }
  }
  return out;
}

namespace detail {

// Box-Muller from explicit uniform bits; avoids the implementation-defined
// std::normal_distribution sequence.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}
  double next() {
    if (have_) {
      have_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = (rng_() >> 11) * 0x1.0p-53;
    } while (u1 <= 0.0);
    const double u2 = (rng_() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(kTwoPi * u2);
    have_ = true;
    return r * std::cos(kTwoPi * u2);
  }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool have_ = false;
};

}  // namespace detail

inline constexpr double kNoiseOff = std::numeric_limits<double>::infinity();

// Additive white Gaussian noise at the requested per-channel SNR (dB).
// snr_db = +infinity is a bit-identical passthrough. Per-channel generator
// seeding (seed xor channel) keeps the result independent of scheduling.
inline evalkit::TimeSignalSet add_noise(const evalkit::TimeSignalSet& in,
                                        double snr_db, std::uint64_t seed) {
  evalkit::TimeSignalSet out = in;
  if (std::isinf(snr_db)) return out;
  const double factor = std::pow(10.0, -snr_db / 20.0);
  for (int q = 0; q < in.channels; ++q) {
    double power = 0.0;
    const double* src = in.channel(q);
    for (long t = 0; t < in.length; ++t) power += src[t] * src[t];
    power /= static_cast<double>(in.length);
    const double sigma = std::sqrt(power) * factor;
    detail::GaussianStream g(seed ^ static_cast<std::uint64_t>(q));
    double* dst = out.channel(q);
    for (long t = 0; t < in.length; ++t) dst[t] += sigma * g.next();
  }
  return out;
}

inline ComplexPressureField add_noise(const ComplexPressureField& in,
                                      double snr_db, std::uint64_t seed) {
  ComplexPressureField out = in;
  if (std::isinf(snr_db)) return out;
  const double factor = std::pow(10.0, -snr_db / 20.0);
  const int K = in.bins();
  for (int q = 0; q < in.channels(); ++q) {
    double power = 0.0;
    for (int j = 0; j < K; ++j) power += std::norm(in.at(q, j));
    power /= static_cast<double>(K);
    // complex noise: half the variance in each component
    const double sigma = std::sqrt(power * 0.5) * factor;
    detail::GaussianStream g(seed ^ static_cast<std::uint64_t>(q));
    for (int j = 0; j < K; ++j)
      out.at(q, j) += cplx(sigma * g.next(), sigma * g.next());
  }
  return out;
}

}  // namespace spherepinn::synth
