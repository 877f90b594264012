#pragma once

// Metrics and domain transforms: time-domain NMSE, per-frequency NMSE,
// Helmholtz residual probes, and the DFT bridge between broadband signals
// and per-bin complex pressure fields.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "spherepinn/common.hpp"
#include "spherepinn/evalkit_types.hpp"
#include "spherepinn/sh_transform.hpp"

namespace spherepinn::evalkit {

using sma::ComplexPressureField;

inline constexpr double kNmseFloorDb = -300.0;

namespace detail {

inline double clamp_db(double ratio) {
  if (ratio <= 0.0) return kNmseFloorDb;
  return std::max(kNmseFloorDb, 10.0 * std::log10(ratio));
}

}  // namespace detail

// NMSE = 10 log10( (1/S) sum_s ||est_s - ref_s||^2 / ||ref_s||^2 ), the mean
// over channels taken inside the log. Channels with zero reference energy
// are excluded (recorded in the report and logged). Clamped at -300 dB.
inline NmseReport nmse_time(const TimeSignalSet& estimate,
                            const TimeSignalSet& reference) {
  validate_signals(estimate);
  validate_signals(reference);
  if (estimate.channels != reference.channels ||
      estimate.length != reference.length || estimate.fs != reference.fs)
    throw ShapeMismatchError("nmse_time: signal shapes do not match");

  NmseReport report;
  double acc = 0.0;
  int used = 0;
  for (int q = 0; q < reference.channels; ++q) {
    const double* e = estimate.channel(q);
    const double* r = reference.channel(q);
    double num = 0.0, den = 0.0;
    for (long t = 0; t < reference.length; ++t) {
      const double d = e[t] - r[t];
      num += d * d;
      den += r[t] * r[t];
    }
    if (den == 0.0) {
      report.excluded_channels.push_back(q);
      report.per_channel_db.push_back(kNmseFloorDb);
      continue;
    }
    acc += num / den;
    ++used;
    report.per_channel_db.push_back(detail::clamp_db(num / den));
  }
  if (used == 0) throw ConfigError("nmse_time: reference is all zero");
  if (!report.excluded_channels.empty())
    log_info("nmse_time: excluded " +
             std::to_string(report.excluded_channels.size()) +
             " zero-reference channel(s)");
  report.overall_db = detail::clamp_db(acc / used);
  return report;
}

// Per-frequency companion: the same mean-inside-the-log formula restricted
// to one bin at a time, plus a broadband per-channel aggregate.
inline NmseReport nmse_freq(const ComplexPressureField& estimate,
                            const ComplexPressureField& reference) {
  if (estimate.channels() != reference.channels() ||
      estimate.bins() != reference.bins())
    throw ShapeMismatchError("nmse_freq: field shapes do not match");
  for (int j = 0; j < reference.bins(); ++j)
    if (std::fabs(estimate.wavenumbers[j] - reference.wavenumbers[j]) >
        1e-9 * std::max(1.0, reference.wavenumbers[j]))
      throw ShapeMismatchError("nmse_freq: wavenumber grids do not match");

  NmseReport report;
  const int Q = reference.channels(), K = reference.bins();
  double acc = 0.0;
  int used = 0;
  for (int q = 0; q < Q; ++q) {
    double num = 0.0, den = 0.0;
    for (int j = 0; j < K; ++j) {
      num += std::norm(estimate.at(q, j) - reference.at(q, j));
      den += std::norm(reference.at(q, j));
    }
    if (den == 0.0) {
      report.excluded_channels.push_back(q);
      report.per_channel_db.push_back(kNmseFloorDb);
      continue;
    }
    acc += num / den;
    ++used;
    report.per_channel_db.push_back(detail::clamp_db(num / den));
  }
  if (used == 0) throw ConfigError("nmse_freq: reference is all zero");
  report.overall_db = detail::clamp_db(acc / used);

  for (int j = 0; j < K; ++j) {
    double bin_acc = 0.0;
    int bin_used = 0;
    for (int q = 0; q < Q; ++q) {
      const double den = std::norm(reference.at(q, j));
      if (den == 0.0) continue;
      bin_acc += std::norm(estimate.at(q, j) - reference.at(q, j)) / den;
      ++bin_used;
    }
    report.per_frequency_db.push_back(
        bin_used == 0 ? std::numeric_limits<double>::quiet_NaN()
                      : detail::clamp_db(bin_acc / bin_used));
  }
  return report;
}

// RMS over probes of |lap p + k^2 p| normalized by RMS |k^2 p|, with the
// Laplacian from 7-point central finite differences of the callable.
inline double helmholtz_residual(
    const std::function<cplx(const std::array<double, 3>&)>& field_fn,
    double k, const std::vector<std::array<double, 3>>& probes, double step) {
  if (!(step > 0.0)) throw std::domain_error("helmholtz_residual: step > 0");
  double num = 0.0, den = 0.0;
  for (const auto& p : probes) {
    const cplx center = field_fn(p);
    cplx lap{};
    for (int d = 0; d < 3; ++d) {
      auto pp = p, pm = p;
      pp[d] += step;
      pm[d] -= step;
      lap += field_fn(pp) - 2.0 * center + field_fn(pm);
    }
    lap /= step * step;
    num += std::norm(lap + k * k * center);
    den += std::norm(k * k * center);
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

// Exact-derivative variant: the callee supplies (value, laplacian).
inline double helmholtz_residual(
    const std::function<std::pair<cplx, cplx>(const std::array<double, 3>&)>&
        field_with_lap,
    double k, const std::vector<std::array<double, 3>>& probes) {
  double num = 0.0, den = 0.0;
  for (const auto& p : probes) {
    const auto [value, lap] = field_with_lap(p);
    num += std::norm(lap + k * k * value);
    den += std::norm(k * k * value);
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

namespace detail {

inline bool is_pow2(long n) { return n > 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 FFT (inverse applies the 1/N scale).
inline void fft_radix2(std::vector<cplx>* data, bool inverse) {
  const size_t n = data->size();
  auto& a = *data;
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 1.0 : -1.0) * kTwoPi / static_cast<double>(len);
    const cplx wl = std::polar(1.0, ang);
    for (size_t i = 0; i < n; i += len) {
      cplx w{1.0, 0.0};
      for (size_t j = 0; j < len / 2; ++j) {
        const cplx u = a[i + j];
        const cplx v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (auto& v : a) v /= static_cast<double>(n);
}

}  // namespace detail

// Forward DFT per channel, restricted to bins with f in [f_min, f_max]:
// X_j = sum_t x[t] e^{-2 pi i f_j t / fs}, wavenumbers k_j = 2 pi f_j / c.
// The originating grid (fs, length) is recorded for inversion.
inline ComplexPressureField time_to_freq(const TimeSignalSet& signals,
                                         const sma::ArrayGeometry& geometry,
                                         double f_min, double f_max, double c) {
  validate_signals(signals);
  if (geometry.size() != signals.channels)
    throw ShapeMismatchError("time_to_freq: geometry/channel count mismatch");
  if (!(c > 0.0)) throw ConfigError("time_to_freq: c must be > 0");
  if (f_min < 0.0 || f_max < f_min || f_max > signals.fs / 2.0)
    throw ConfigError("band exceeds Nyquist or is empty");
  const long T = signals.length;
  const double df = signals.fs / static_cast<double>(T);
  std::vector<long> bins;
  for (long j = 0; j <= T / 2; ++j) {
    const double f = j * df;
    if (f >= f_min && f <= f_max) bins.push_back(j);
  }
  if (bins.empty()) throw ConfigError("band contains no DFT bins");

  ComplexPressureField field;
  field.geometry = geometry;
  field.medium_c = c;
  field.time_fs = signals.fs;
  field.time_length = T;
  for (long j : bins) field.wavenumbers.push_back(kTwoPi * (j * df) / c);
  field.pressures.assign(static_cast<size_t>(signals.channels) * bins.size(),
                         cplx{});

  const bool use_fft = detail::is_pow2(T) && bins.size() > 32;
  for (int q = 0; q < signals.channels; ++q) {
    const double* x = signals.channel(q);
    if (use_fft) {
      std::vector<cplx> buf(x, x + T);
      detail::fft_radix2(&buf, false);
      for (size_t bi = 0; bi < bins.size(); ++bi)
        field.at(q, static_cast<int>(bi)) = buf[bins[bi]];
    } else {
      for (size_t bi = 0; bi < bins.size(); ++bi) {
        const double w = -kTwoPi * bins[bi] / static_cast<double>(T);
        cplx acc{};
        for (long t = 0; t < T; ++t) acc += x[t] * std::polar(1.0, w * t);
        field.at(q, static_cast<int>(bi)) = acc;
      }
    }
  }
  return field;
}

// Hermitian-symmetric inverse DFT; bins outside the field are zero. Fails if
// the field's recorded grid conflicts with (fs, length) or a wavenumber does
// not sit on a DFT bin.
inline TimeSignalSet freq_to_time(const ComplexPressureField& field, double fs,
                                  long length) {
  if (!(fs > 0.0) || length < 1)
    throw ConfigError("freq_to_time: fs > 0 and length >= 1 required");
  if (field.time_fs != 0.0 &&
      (std::fabs(field.time_fs - fs) > 1e-9 || field.time_length != length))
    throw ShapeMismatchError(
        "freq_to_time: field metadata conflicts with requested grid");
  const double df = fs / static_cast<double>(length);
  std::vector<long> bins(field.bins());
  for (int j = 0; j < field.bins(); ++j) {
    const double f = field.wavenumbers[j] * field.medium_c / kTwoPi;
    const double bin = f / df;
    const long b = std::lround(bin);
    if (std::fabs(bin - b) > 1e-6 || b < 0 || b > length / 2)
      throw ShapeMismatchError(
          "freq_to_time: wavenumber off the DFT grid for this fs/length");
    bins[j] = b;
  }

  TimeSignalSet out;
  out.fs = fs;
  out.channels = field.channels();
  out.length = length;
  out.samples.assign(static_cast<size_t>(out.channels) * length, 0.0);

  const bool full_band = detail::is_pow2(length) &&
                         static_cast<long>(bins.size()) == length / 2 + 1;
  for (int q = 0; q < out.channels; ++q) {
    double* x = out.channel(q);
    if (full_band) {
      std::vector<cplx> spec(length, cplx{});
      for (size_t bi = 0; bi < bins.size(); ++bi) {
        spec[bins[bi]] = field.at(q, static_cast<int>(bi));
        if (bins[bi] != 0 && bins[bi] != length / 2)
          spec[length - bins[bi]] = std::conj(field.at(q, static_cast<int>(bi)));
      }
      detail::fft_radix2(&spec, true);
      for (long t = 0; t < length; ++t) x[t] = spec[t].real();
    } else {
      for (size_t bi = 0; bi < bins.size(); ++bi) {
        const long b = bins[bi];
        const cplx X = field.at(q, static_cast<int>(bi));
        const double w = kTwoPi * b / static_cast<double>(length);
        const double scale =
            (b == 0 || 2 * b == length) ? 1.0 / length : 2.0 / length;
        for (long t = 0; t < length; ++t) {
          const cplx e = std::polar(1.0, w * t);
          x[t] += scale * (X * e).real();
        }
      }
    }
  }
  return out;
}

}  // namespace spherepinn::evalkit
