#pragma once

#include <stdexcept>
#include <string>

namespace subcurv {

// Base class for every failure this library raises on purpose.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A documented precondition of an operation does not hold.
struct PreconditionError : Error {
  using Error::Error;
};

// Input frame is rank deficient (or numerically so) under the given metric.
struct DegenerateFrameError : Error {
  using Error::Error;
};

// Metric matrix is singular / not positive definite at the evaluation point.
struct SingularMetricError : Error {
  using Error::Error;
};

// Operation undefined in this dimension (e.g. Weyl part below dimension 4).
struct UnsupportedDimensionError : Error {
  using Error::Error;
};

// Projection Jacobian does not have the rank a submersion requires.
struct NotASubmersionError : Error {
  using Error::Error;
};

// Plane spanned by the two vectors is degenerate.
struct DegeneratePlaneError : Error {
  using Error::Error;
};

// Run configuration is malformed or inconsistent.
struct ConfigError : Error {
  using Error::Error;
};

// Model construction or self-verification failed.
struct ModelError : Error {
  using Error::Error;
};

}  // namespace subcurv
