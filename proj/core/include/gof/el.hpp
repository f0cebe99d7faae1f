#pragma once

// Empirical-likelihood goodness-of-fit test with growing cosine constraints.
//
// For fitted levels u_i = F0((x_i - mu_hat) / sigma_hat) the estimating
// functions are phi_h(u) = sqrt(2) cos(h pi u), h = 1..m. The profile EL ratio
// is computed through its Lagrange dual: p_i = 1 / (n (1 + lambda' g_i)) with
// lambda maximizing sum log(1 + lambda' g_i), and
//   -2 log R_n = 2 sum log(1 + lambda' g_i)  ~  chi^2 with m - 2 df.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "gof/distributions.hpp"
#include "gof/estimation.hpp"

namespace gof {

enum class ElVariant { EL1, EL2 };

std::string_view to_string(ElVariant v) noexcept;

/// sqrt(2) cos(h pi u); throws DomainError for h < 1 or u outside [0, 1].
double phi(int h, double u);

/// Row-major n x m matrix of estimating-function values.
class ConstraintMatrix {
 public:
  ConstraintMatrix(std::size_t n, std::size_t m, std::vector<double> data);

  std::size_t n() const noexcept { return n_; }
  std::size_t m() const noexcept { return m_; }
  std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * m_, m_}; }
  double operator()(std::size_t i, std::size_t h) const noexcept { return data_[i * m_ + h]; }
  std::span<const double> data() const noexcept { return data_; }

 private:
  std::size_t n_;
  std::size_t m_;
  std::vector<double> data_;
};

/// g[i][h-1] = phi(h, F0((x_i - mu_hat) / sigma_hat)). Throws IllPosedError
/// when m >= n.
ConstraintMatrix constraint_matrix(NullFamily family, const Sample& sample,
                                   const LocationScaleEstimate& est, std::size_t m);

struct DualSolution {
  std::vector<double> lambda;
  std::vector<double> weights;
  /// -2 log R_n = 2 sum log(1 + lambda' g_i).
  double statistic = 0.0;
  int iterations = 0;
  /// || sum_i p_i g_i ||.
  double kkt_residual = 0.0;
};

/// Damped Newton on the concave dual with log extended quadratically below
/// 1/n. Throws InfeasibleConstraintsError when zero is not inside the convex
/// hull of the rows (divergence, or some final 1 + lambda' g_i <= 1/n).
DualSolution solve_dual(const ConstraintMatrix& g);

struct ElOptions {
  /// Overrides the variant's constraint count.
  std::optional<std::size_t> m;
  /// Overrides df = m - 2.
  std::optional<int> df;
};

/// Constraint count floor(n^{1/3}) + 1 (EL1) or + 2 (EL2).
std::size_t el_constraint_count(std::size_t n, ElVariant variant);

/// Smallest n for which the default constraint counts are usable.
inline constexpr std::size_t kElMinSampleSize = 27;

struct ElStatistic {
  /// +infinity when the constraints are infeasible.
  double statistic = 0.0;
  int df = 0;
  std::size_t m = 0;
  bool feasible = true;
  LocationScaleEstimate estimate;
};

/// mle -> constraint_matrix -> solve_dual.
ElStatistic el_statistic(NullFamily family, const Sample& sample, ElVariant variant,
                         const ElOptions& options = {});

/// Inverse of the chi-square CDF by bracketed root finding on P(df/2, x/2).
double chi2_quantile(int df, double p);

/// Upper tail probability of the chi-square distribution.
double chi2_sf(int df, double x);

struct ElOutcome {
  double statistic = 0.0;
  int df = 0;
  double critical_value = 0.0;
  double p_value = 1.0;
  bool reject = false;
  ElVariant variant = ElVariant::EL1;
  std::size_t m = 0;
};

/// Reject iff statistic > chi2_quantile(df, 1 - alpha); +infinity always rejects.
ElOutcome el_test(double statistic, int df, double alpha);
ElOutcome el_test(const ElStatistic& stat, ElVariant variant, double alpha);

}  // namespace gof
