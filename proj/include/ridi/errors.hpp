#pragma once

#include <stdexcept>
#include <string>

namespace ridi {

/// Bad command line or config input; maps to process exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input file (CSV, manifest, model); carries a human-readable
/// location in the message.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Structurally valid file whose content violates a contract (missing columns,
/// non-monotonic timestamps, bad magic/version/checksum).
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sensor stream with a gap too large to interpolate across.
struct GapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Normal equations singular with lambda = 0 and underdetermined constraints.
struct RankDeficiencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Iterative solver ran out of passes; carries the last objective value.
struct ConvergenceError : std::runtime_error {
  double last_objective;
  ConvergenceError(const std::string& msg, double obj)
      : std::runtime_error(msg), last_objective(obj) {}
};

}  // namespace ridi
