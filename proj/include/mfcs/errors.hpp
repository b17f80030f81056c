#pragma once

#include <stdexcept>
#include <string>

namespace mfcs {

// Base for every error raised by the library. Callers that only care about
// "something went wrong in mfcs" can catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Out-of-range argument (alpha outside (0,1), negative quantile, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Inconsistent sizes or feature dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// The requested computation exceeds the configured operation cap.
class ComplexityError : public Error {
 public:
  using Error::Error;
};

// Every permutation (or ordering) of the data had zero density.
class DegenerateDensityError : public Error {
 public:
  using Error::Error;
};

// Factorization failure, non-convergence, broken post-condition.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Malformed or incomplete configuration document.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// No pool value satisfies the bounded-query constraint.
class BoundInfeasibleError : public Error {
 public:
  BoundInfeasibleError(const std::string& what, double smallest_candidate)
      : Error(what), smallest_candidate_(smallest_candidate) {}

  double smallest_candidate() const noexcept { return smallest_candidate_; }

 private:
  double smallest_candidate_;
};

}  // namespace mfcs
