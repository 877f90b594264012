#pragma once

#include <cmath>
#include <vector>

#include "spherepinn/common.hpp"

namespace spherepinn::evalkit {

// Multichannel real time-domain signals, channel-major storage.
struct TimeSignalSet {
  double fs = 0.0;
  int channels = 0;
  long length = 0;
  std::vector<double> samples;  // channels * length, channel-major

  double* channel(int q) { return samples.data() + static_cast<size_t>(q) * length; }
  const double* channel(int q) const {
    return samples.data() + static_cast<size_t>(q) * length;
  }
  double& at(int q, long t) { return samples[static_cast<size_t>(q) * length + t]; }
  double at(int q, long t) const {
    return samples[static_cast<size_t>(q) * length + t];
  }
};

inline void validate_signals(const TimeSignalSet& s) {
  if (!(s.fs > 0.0)) throw ConfigError("signal fs must be > 0");
  if (s.channels < 1 || s.length < 1)
    throw ConfigError("signals need >= 1 channel and >= 1 sample");
  if (s.samples.size() != static_cast<size_t>(s.channels) * s.length)
    throw ShapeMismatchError("sample buffer does not match channels x length");
  for (double v : s.samples)
    if (!std::isfinite(v)) throw ConfigError("non-finite sample");
}

struct NmseReport {
  double overall_db = 0.0;
  std::vector<double> per_channel_db;
  std::vector<double> per_frequency_db;  // only for frequency-domain reports
  std::vector<int> excluded_channels;    // zero-energy reference channels
};

}  // namespace spherepinn::evalkit
