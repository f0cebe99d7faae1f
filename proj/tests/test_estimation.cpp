#include <doctest.h>

#include <cmath>
#include <vector>

#include "gof/estimation.hpp"

using namespace gof;

namespace {

double logistic_loglik(const std::vector<double>& x, double mu, double sigma) {
  double s = 0.0;
  for (double v : x) {
    const double z = (v - mu) / sigma;
    s += -z - 2.0 * std::log1p(std::exp(-z)) - std::log(sigma);
  }
  return s;
}

}  // namespace

TEST_CASE("normal mle is mean and root mean square deviation") {
  Sample s({1.0, 2.0, 4.0, 7.0});
  const auto e = mle(NullFamily::Normal, s);
  CHECK(e.mu_hat == doctest::Approx(3.5));
  CHECK(e.sigma_hat == doctest::Approx(std::sqrt(21.0 / 4.0)));
  CHECK(e.converged);
  CHECK(e.gradient_norm < 1e-12);
}

TEST_CASE("logistic mle solves the score equations") {
  const auto s = sample(Distribution::logistic(2.0, 5.0), 500, 17);
  const auto e = mle(NullFamily::Logistic, s);
  CHECK(e.converged);
  CHECK(e.gradient_norm < 1e-8);
  CHECK(std::abs(e.mu_hat - 2.0) < 1.0);
  CHECK(std::abs(e.sigma_hat - 5.0) < 0.6);
  // Local maximum: nudging either parameter lowers the likelihood.
  std::vector<double> x(s.values().begin(), s.values().end());
  const double at = logistic_loglik(x, e.mu_hat, e.sigma_hat);
  for (auto [dm, ds] : {std::pair{1e-3, 0.0}, std::pair{-1e-3, 0.0}, std::pair{0.0, 1e-3},
                        std::pair{0.0, -1e-3}}) {
    CHECK(logistic_loglik(x, e.mu_hat + dm, e.sigma_hat + ds) < at);
  }
}

TEST_CASE("mle is affine equivariant") {
  const auto s = sample(Distribution::normal_mixture(), 100, 3);
  for (auto family : {NullFamily::Normal, NullFamily::Logistic}) {
    const auto e = mle(family, s);
    std::vector<double> y;
    for (double v : s.values()) y.push_back(-7.0 + 0.25 * v);
    const auto f = mle(family, Sample(y));
    CHECK(f.mu_hat == doctest::Approx(-7.0 + 0.25 * e.mu_hat).epsilon(1e-10));
    CHECK(f.sigma_hat == doctest::Approx(0.25 * e.sigma_hat).epsilon(1e-10));
  }
}

TEST_CASE("mle rejects degenerate input") {
  CHECK_THROWS_AS(mle(NullFamily::Normal, Sample({1.0, 2.0})), DomainError);
  CHECK_THROWS_AS(mle(NullFamily::Normal, Sample({4.0, 4.0, 4.0, 4.0})), DegenerateSampleError);
  CHECK_THROWS_AS(mle(NullFamily::Logistic, Sample({-1.0, -1.0, -1.0})), DegenerateSampleError);
}

TEST_CASE("standardize") {
  Sample s({1.0, 3.0, 5.0});
  const auto r = standardize(s, {3.0, 2.0});
  CHECK(r.z == std::vector<double>{-1.0, 0.0, 1.0});
  CHECK_THROWS_AS(standardize(s, {0.0, 0.0}), DomainError);
}
