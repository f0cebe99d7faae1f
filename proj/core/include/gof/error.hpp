#pragma once

#include <stdexcept>
#include <string>

namespace gof {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A null-family-only operation was called with an alternative family.
class UnsupportedFamilyError : public Error {
 public:
  using Error::Error;
};

/// The sample has (numerically) zero spread.
class DegenerateSampleError : public Error {
 public:
  using Error::Error;
};

class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double best_estimate)
      : Error(what), best_estimate_(best_estimate) {}
  double best_estimate() const noexcept { return best_estimate_; }

 private:
  double best_estimate_;
};

class BracketError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

/// Zero is not inside the convex hull of the estimating-function rows.
class InfeasibleConstraintsError : public Error {
 public:
  using Error::Error;
};

/// More constraints than observations, or too few observations for the
/// requested constraint count.
class IllPosedError : public Error {
 public:
  using Error::Error;
};

}  // namespace gof
