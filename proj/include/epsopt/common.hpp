#pragma once

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace epsopt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Bad arguments or malformed inputs (dimension mismatches, invalid
/// probability vectors, out-of-range config values).
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Numerical failures: non-PD covariance, non-finite gradients, broken
/// variance gaps.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Filesystem / serialization failures.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }
inline bool all_finite(const Mat& m) { return m.allFinite(); }

inline double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

/// Formats a double with `digits` significant digits ("%.Ng"); report files
/// use digits = 6.
inline std::string format_sig(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, x);
  return std::string(buf);
}

/// Full-precision text form that round-trips exactly through strtod.
inline std::string format_exact(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf);
}

}  // namespace epsopt
