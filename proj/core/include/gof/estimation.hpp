#pragma once

#include <cstddef>
#include <vector>

#include "gof/distributions.hpp"
#include "gof/error.hpp"

namespace gof {

struct LocationScaleEstimate {
  double mu_hat = 0.0;
  double sigma_hat = 1.0;
  int iterations = 0;
  bool converged = false;
  /// Euclidean norm of the scale-free score vector sigma * grad(loglik).
  double gradient_norm = 0.0;
};

/// Standardized residuals (x_i - mu_hat) / sigma_hat, in sample order.
struct Residuals {
  std::vector<double> z;
};

/// Newton iteration for the logistic MLE ran out of iterations or could not
/// find an ascent step. Carries the last iterate.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, LocationScaleEstimate last)
      : Error(what), last_(last) {}
  const LocationScaleEstimate& last_iterate() const noexcept { return last_; }

 private:
  LocationScaleEstimate last_;
};

/// Maximum likelihood estimate of (mu, sigma) under the standardized null
/// family. Normal is closed form with divisor n; logistic uses damped Newton
/// from a moment start, converged when gradient_norm < 1e-10 * n.
///
/// Throws DomainError for n < 3 and DegenerateSampleError when the spread is
/// numerically zero.
LocationScaleEstimate mle(NullFamily family, const Sample& sample);

Residuals standardize(const Sample& sample, const LocationScaleEstimate& est);

}  // namespace gof
