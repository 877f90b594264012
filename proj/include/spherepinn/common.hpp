#pragma once

#include <complex>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

namespace spherepinn {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kFourPi = 4.0 * kPi;

// Error taxonomy. The CLI maps these onto its exit codes:
// ConfigError -> 2, SynthesisError -> 3, ShapeMismatchError -> 4,
// NonFiniteLossError -> 5. Everything else is a plain failure.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SynthesisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OrderTooHighError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct BesselNullError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EnclosureUnsupportedError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct NonFiniteLossError : std::runtime_error {
  long iteration;
  explicit NonFiniteLossError(long it)
      : std::runtime_error("loss became non-finite at iteration " +
                           std::to_string(it)),
        iteration(it) {}
};

enum class LogLevel : int { Error = 0, Info = 1, Debug = 2 };

// SPHEREPINN_LOG in {error, info, debug}; default info.
inline LogLevel log_level() {
  static const LogLevel lvl = [] {
    const char* e = std::getenv("SPHEREPINN_LOG");
    if (!e) return LogLevel::Info;
    if (std::strcmp(e, "error") == 0) return LogLevel::Error;
    if (std::strcmp(e, "debug") == 0) return LogLevel::Debug;
    return LogLevel::Info;
  }();
  return lvl;
}

inline void log_msg(LogLevel lvl, const std::string& msg) {
  if (static_cast<int>(lvl) <= static_cast<int>(log_level())) {
    const char* tag = lvl == LogLevel::Error  ? "error"
                      : lvl == LogLevel::Info ? "info"
                                              : "debug";
    std::fprintf(stderr, "[spherepinn %s] %s\n", tag, msg.c_str());
  }
}

inline void log_error(const std::string& msg) { log_msg(LogLevel::Error, msg); }
inline void log_info(const std::string& msg) { log_msg(LogLevel::Info, msg); }
inline void log_debug(const std::string& msg) { log_msg(LogLevel::Debug, msg); }

}  // namespace spherepinn
