#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rdc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SizeMismatch : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class UnknownSystem : public ConfigError {
 public:
  explicit UnknownSystem(const std::string& name)
      : ConfigError("unknown registry system '" + name + "'") {}
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Raised when f or g cannot be evaluated at (x, u): non-finite output or a
/// state outside the configured box |u_i| <= r_max.
class EvaluationFault : public Error {
 public:
  EvaluationFault(double x, std::vector<double> u, const std::string& reason);

  double x() const { return x_; }
  const std::vector<double>& u() const { return u_; }

 private:
  double x_;
  std::vector<double> u_;
};

class DivergenceFault : public Error {
 public:
  DivergenceFault(double t, double max_norm);

  double time() const { return t_; }
  double max_norm() const { return max_norm_; }

 private:
  double t_;
  double max_norm_;
};

class StepSizeFailure : public Error {
 public:
  using Error::Error;
};

/// A matrix-function precondition (spectrum location) is violated.
class DomainFault : public Error {
 public:
  using Error::Error;
};

class RouteMismatch : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace rdc
