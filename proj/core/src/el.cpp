#include "gof/el.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "gof/numerics.hpp"

namespace gof {

namespace {

constexpr int kMaxDualIterations = 200;
constexpr double kDualGradientTol = 1e-8;
constexpr double kDivergenceNorm = 1e10;
constexpr double kWeightSumTol = 1e-6;

// log(z) continued below eps by its second-order Taylor expansion at eps.
struct LogStar {
  double eps;
  double log_eps;

  explicit LogStar(double e) : eps(e), log_eps(std::log(e)) {}

  double value(double z) const {
    if (z >= eps) return std::log(z);
    const double r = z / eps;
    return log_eps - 1.5 + 2.0 * r - 0.5 * r * r;
  }
  double d1(double z) const { return z >= eps ? 1.0 / z : (2.0 - z / eps) / eps; }
  double d2(double z) const { return z >= eps ? -1.0 / (z * z) : -1.0 / (eps * eps); }
};

// Solves A x = b for a small symmetric positive definite A (row-major).
// Returns false when the Cholesky factorization breaks down.
bool cholesky_solve(std::vector<double> a, std::size_t m, std::vector<double>& x) {
  for (std::size_t j = 0; j < m; ++j) {
    double diag = a[j * m + j];
    for (std::size_t k = 0; k < j; ++k) diag -= a[j * m + k] * a[j * m + k];
    if (!(diag > 0.0)) return false;
    const double ljj = std::sqrt(diag);
    a[j * m + j] = ljj;
    for (std::size_t i = j + 1; i < m; ++i) {
      double v = a[i * m + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * m + k] * a[j * m + k];
      a[i * m + j] = v / ljj;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    double v = x[i];
    for (std::size_t k = 0; k < i; ++k) v -= a[i * m + k] * x[k];
    x[i] = v / a[i * m + i];
  }
  for (std::size_t i = m; i-- > 0;) {
    double v = x[i];
    for (std::size_t k = i + 1; k < m; ++k) v -= a[k * m + i] * x[k];
    x[i] = v / a[i * m + i];
  }
  return true;
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double inner(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double dual_objective(const ConstraintMatrix& g, const std::vector<double>& lambda,
                      const LogStar& ls) {
  double obj = 0.0;
  for (std::size_t i = 0; i < g.n(); ++i) obj += ls.value(1.0 + inner(lambda, g.row(i)));
  return obj;
}

std::size_t integer_cube_root(std::size_t n) {
  auto c = static_cast<std::size_t>(std::cbrt(static_cast<double>(n)));
  while ((c + 1) * (c + 1) * (c + 1) <= n) ++c;
  while (c > 0 && c * c * c > n) --c;
  return c;
}

}  // namespace

std::string_view to_string(ElVariant v) noexcept { return v == ElVariant::EL1 ? "EL1" : "EL2"; }

double phi(int h, double u) {
  if (h < 1) throw DomainError("phi: index must be >= 1");
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("phi: argument must lie in [0, 1]");
  return std::numbers::sqrt2 * std::cos(h * std::numbers::pi * u);
}

ConstraintMatrix::ConstraintMatrix(std::size_t n, std::size_t m, std::vector<double> data)
    : n_(n), m_(m), data_(std::move(data)) {
  if (n_ == 0 || m_ == 0) throw DomainError("ConstraintMatrix: n and m must be positive");
  if (data_.size() != n_ * m_) throw DomainError("ConstraintMatrix: data size must be n * m");
  for (double v : data_) {
    if (!std::isfinite(v)) throw DomainError("ConstraintMatrix: entries must be finite");
  }
}

ConstraintMatrix constraint_matrix(NullFamily family, const Sample& sample,
                                   const LocationScaleEstimate& est, std::size_t m) {
  const std::size_t n = sample.size();
  if (m == 0) throw IllPosedError("constraint_matrix: at least one constraint is required");
  if (m >= n) {
    throw IllPosedError("constraint_matrix: need more observations (" + std::to_string(n) +
                        ") than constraints (" + std::to_string(m) + ")");
  }
  if (!(est.sigma_hat > 0.0)) throw DomainError("constraint_matrix: sigma_hat must be positive");

  const Distribution null_dist = Distribution::standard(family);
  std::vector<double> data(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = cdf(null_dist, (sample[i] - est.mu_hat) / est.sigma_hat);
    for (std::size_t h = 0; h < m; ++h) data[i * m + h] = phi(static_cast<int>(h + 1), u);
  }
  return ConstraintMatrix(n, m, std::move(data));
}

DualSolution solve_dual(const ConstraintMatrix& g) {
  const std::size_t n = g.n(), m = g.m();
  const LogStar ls(1.0 / static_cast<double>(n));

  DualSolution sol;
  sol.lambda.assign(m, 0.0);
  std::vector<double> grad(m), hess(m * m), step(m), trial(m);
  bool converged = false;

  double obj = dual_objective(g, sol.lambda, ls);
  for (int it = 0; it <= kMaxDualIterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    std::fill(hess.begin(), hess.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = g.row(i);
      const double z = 1.0 + inner(sol.lambda, row);
      const double d1 = ls.d1(z);
      const double w = -ls.d2(z);
      for (std::size_t a = 0; a < m; ++a) {
        grad[a] += d1 * row[a];
        for (std::size_t b = 0; b <= a; ++b) hess[a * m + b] += w * row[a] * row[b];
      }
    }
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < a; ++b) hess[b * m + a] = hess[a * m + b];
    }
    sol.iterations = it;
    if (norm2(grad) < kDualGradientTol) {
      converged = true;
      break;
    }
    if (it == kMaxDualIterations) break;

    step = grad;
    if (!cholesky_solve(hess, m, step)) {
      // Rank-deficient constraints: regularize the Newton system slightly.
      double trace = 0.0;
      for (std::size_t a = 0; a < m; ++a) trace += hess[a * m + a];
      auto ridged = hess;
      for (std::size_t a = 0; a < m; ++a) ridged[a * m + a] += 1e-10 * (trace + 1.0);
      step = grad;
      if (!cholesky_solve(ridged, m, step)) break;
    }

    double t = 1.0;
    bool accepted = false;
    const double slack = 1e-14 * (std::abs(obj) + 1.0);
    for (int h = 0; h < 60; ++h, t *= 0.5) {
      for (std::size_t a = 0; a < m; ++a) trial[a] = sol.lambda[a] + t * step[a];
      const double candidate = dual_objective(g, trial, ls);
      if (candidate >= obj - slack) {
        sol.lambda = trial;
        obj = candidate;
        accepted = true;
        break;
      }
    }
    if (!accepted || norm2(sol.lambda) > kDivergenceNorm) break;
  }

  if (!converged) {
    throw InfeasibleConstraintsError(
        "solve_dual: Newton iteration diverged; zero is not inside the convex hull");
  }

  sol.weights.resize(n);
  std::vector<double> weighted(m, 0.0);
  double stat = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = g.row(i);
    const double z = 1.0 + inner(sol.lambda, row);
    if (z <= ls.eps) {
      throw InfeasibleConstraintsError(
          "solve_dual: solution leaves the probability simplex; constraints are infeasible");
    }
    sol.weights[i] = 1.0 / (static_cast<double>(n) * z);
    for (std::size_t a = 0; a < m; ++a) weighted[a] += sol.weights[i] * row[a];
    stat += std::log(z);
  }
  // At a genuine stationary point sum_i p_i = 1 exactly. When zero is outside
  // the hull the gradient decays like n / |lambda| and can pass the tolerance
  // while lambda runs off to infinity; the weights then sum to nearly zero.
  double total = 0.0;
  for (double w : sol.weights) total += w;
  if (std::abs(total - 1.0) > kWeightSumTol) {
    throw InfeasibleConstraintsError(
        "solve_dual: weights do not sum to one; zero is not inside the convex hull");
  }
  sol.statistic = std::max(0.0, 2.0 * stat);
  sol.kkt_residual = norm2(weighted);
  return sol;
}

std::size_t el_constraint_count(std::size_t n, ElVariant variant) {
  return integer_cube_root(n) + (variant == ElVariant::EL1 ? 1 : 2);
}

ElStatistic el_statistic(NullFamily family, const Sample& sample, ElVariant variant,
                         const ElOptions& options) {
  const std::size_t n = sample.size();
  if (!options.m && n < kElMinSampleSize) {
    throw IllPosedError("el_statistic: " + std::string(to_string(variant)) + " needs n >= " +
                        std::to_string(kElMinSampleSize) + " (got " + std::to_string(n) + ")");
  }
  ElStatistic out;
  out.m = options.m ? *options.m : el_constraint_count(n, variant);
  out.df = options.df ? *options.df : static_cast<int>(out.m) - 2;
  if (out.df < 1) throw IllPosedError("el_statistic: degrees of freedom must be >= 1");
  if (out.m >= n) {
    throw IllPosedError("el_statistic: constraint count must be smaller than n");
  }

  out.estimate = mle(family, sample);
  const ConstraintMatrix g = constraint_matrix(family, sample, out.estimate, out.m);
  try {
    out.statistic = solve_dual(g).statistic;
  } catch (const InfeasibleConstraintsError&) {
    out.statistic = std::numeric_limits<double>::infinity();
    out.feasible = false;
  }
  return out;
}

double chi2_quantile(int df, double p) {
  if (df < 1) throw DomainError("chi2_quantile: df must be >= 1");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("chi2_quantile: p must lie in (0, 1)");
  const double s = 0.5 * df;
  // Increasing in x either way; the upper form keeps precision for p near 1.
  auto f = [s, p](double x) {
    return p <= 0.5 ? numerics::regularized_gamma_lower(s, 0.5 * x) - p
                    : (1.0 - p) - numerics::regularized_gamma_upper(s, 0.5 * x);
  };
  double hi = df + 10.0 * std::sqrt(2.0 * df) + 10.0;
  while (f(hi) < 0.0) hi *= 2.0;
  return numerics::find_root(f, 0.0, hi, 1e-13 * hi);
}

double chi2_sf(int df, double x) {
  if (df < 1) throw DomainError("chi2_sf: df must be >= 1");
  if (std::isnan(x)) throw DomainError("chi2_sf: argument is NaN");
  if (x <= 0.0) return 1.0;
  return numerics::regularized_gamma_upper(0.5 * df, 0.5 * x);
}

ElOutcome el_test(double statistic, int df, double alpha) {
  if (df < 1) throw DomainError("el_test: df must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("el_test: alpha must lie in (0, 1)");
  if (std::isnan(statistic)) throw DomainError("el_test: statistic is NaN");
  ElOutcome out;
  out.statistic = statistic;
  out.df = df;
  out.critical_value = chi2_quantile(df, 1.0 - alpha);
  out.p_value = std::isinf(statistic) ? 0.0 : chi2_sf(df, statistic);
  out.reject = statistic > out.critical_value;
  out.m = static_cast<std::size_t>(df + 2);
  return out;
}

ElOutcome el_test(const ElStatistic& stat, ElVariant variant, double alpha) {
  ElOutcome out = el_test(stat.statistic, stat.df, alpha);
  out.variant = variant;
  out.m = stat.m;
  return out;
}

}  // namespace gof
