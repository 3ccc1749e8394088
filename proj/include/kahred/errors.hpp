#pragma once

#include <stdexcept>
#include <string>

namespace kahred {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: jet order out of range, malformed scenario, bad grid.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A caller-supplied argument violates a precondition (zero vector, C = 0, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Elementary function evaluated outside its domain on a jet.
class NumericDomainError : public Error {
 public:
  NumericDomainError(const std::string& what, double offending)
      : Error(what + " (offending value " + std::to_string(offending) + ")"),
        value_(offending) {}
  double value() const { return value_; }

 private:
  double value_;
};

/// Degenerate geometry: non-positive metric, singular orbit, rank loss.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Newton correction onto a level set failed to converge.
class RootFindError : public Error {
 public:
  RootFindError(const std::string& what, double worst)
      : Error(what + " (worst residual " + std::to_string(worst) + ")"), worst_(worst) {}
  double worst_residual() const { return worst_; }

 private:
  double worst_;
};

/// A finite-difference oracle detected an unusable step.
class OracleError : public Error {
 public:
  using Error::Error;
};

}  // namespace kahred
