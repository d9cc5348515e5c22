#pragma once

#include <stdexcept>
#include <string>

namespace solitonsim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside the domain of a map (e.g. projecting the zero vector).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Caller broke a documented precondition (non-unit point, non-tangent vector, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The time stepper left the constraint manifold too far to recover.
class InstabilityError : public Error {
 public:
  using Error::Error;
};

/// Configuration or input file rejected before any computation.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Right-hand side of a periodic Poisson problem has nonzero mean.
class CompatibilityError : public Error {
 public:
  CompatibilityError(const std::string& what, double mean)
      : Error(what), mean_(mean) {}
  double mean() const { return mean_; }

 private:
  double mean_;
};

}  // namespace solitonsim
