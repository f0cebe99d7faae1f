#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "gof/el.hpp"
#include "oracles.hpp"

using namespace gof;

namespace {

ConstraintMatrix rows_from_levels(const std::vector<double>& u, std::size_t m) {
  std::vector<double> data;
  for (double v : u) {
    for (std::size_t h = 1; h <= m; ++h) data.push_back(phi(static_cast<int>(h), v));
  }
  return ConstraintMatrix(u.size(), m, data);
}

}  // namespace

TEST_CASE("phi is orthonormal on [0, 1]") {
  for (int h = 1; h <= 8; ++h) {
    for (int k = h; k <= 8; ++k) {
      const double ip =
          oracle::simpson([&](double u) { return phi(h, u) * phi(k, u); }, 0.0, 1.0, 2000);
      CHECK(std::abs(ip - (h == k ? 1.0 : 0.0)) < 1e-6);
    }
    // Each estimating function has mean zero under the null.
    CHECK(std::abs(oracle::simpson([&](double u) { return phi(h, u); }, 0.0, 1.0, 2000)) < 1e-6);
  }
  CHECK_THROWS_AS(phi(0, 0.5), DomainError);
  CHECK_THROWS_AS(phi(1, 1.5), DomainError);
}

TEST_CASE("dual solution matches a primal grid search for small n") {
  struct Case {
    std::vector<double> u;
    std::size_t m;
  };
  const std::vector<Case> cases{
      {{0.1, 0.45, 0.8}, 1},
      {{0.05, 0.3, 0.62, 0.9}, 1},
      {{0.12, 0.33, 0.5, 0.71, 0.93}, 2},
      {{0.08, 0.2, 0.41, 0.58, 0.77, 0.95}, 3},
      {{0.15, 0.22, 0.6, 0.64, 0.88, 0.97}, 3},
  };
  for (const auto& c : cases) {
    CAPTURE(c.u.size());
    const auto g = rows_from_levels(c.u, c.m);
    const auto dual = solve_dual(g);
    CHECK(std::abs(dual.statistic - oracle::primal_grid_search(g)) < 1e-3);
    double total = 0.0;
    for (double w : dual.weights) total += w;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(dual.kkt_residual < 1e-8);
  }
}

TEST_CASE("balanced constraints give a zero statistic") {
  // Levels symmetric about 1/2 cancel every odd cosine; with one constraint
  // the uniform weights already satisfy the moment condition.
  const auto g = rows_from_levels({0.2, 0.5, 0.8}, 1);
  const auto d = solve_dual(g);
  CHECK(d.statistic < 1e-12);
  for (double w : d.weights) CHECK(w == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("infeasible constraints are reported") {
  // Every row has phi_1 > 0, so zero is outside the convex hull.
  const auto g = rows_from_levels({0.05, 0.1, 0.2, 0.3}, 1);
  CHECK_THROWS_AS(solve_dual(g), InfeasibleConstraintsError);
}

TEST_CASE("constraint counts") {
  CHECK(el_constraint_count(27, ElVariant::EL1) == 4);
  CHECK(el_constraint_count(27, ElVariant::EL2) == 5);
  CHECK(el_constraint_count(63, ElVariant::EL1) == 4);
  CHECK(el_constraint_count(64, ElVariant::EL1) == 5);
  CHECK(el_constraint_count(500, ElVariant::EL2) == 9);
  CHECK(el_constraint_count(1000, ElVariant::EL1) == 11);
}

TEST_CASE("constraint matrix") {
  Sample s({-1.0, 0.0, 2.0, 0.5});
  const auto g = constraint_matrix(NullFamily::Normal, s, {0.0, 1.0}, 2);
  CHECK(g.n() == 4);
  CHECK(g.m() == 2);
  CHECK(g(1, 0) == doctest::Approx(std::numbers::sqrt2 * std::cos(0.5 * std::numbers::pi)));
  CHECK(g(2, 1) == doctest::Approx(phi(2, normal_cdf(2.0))));
  CHECK_THROWS_AS(constraint_matrix(NullFamily::Normal, s, {0.0, 1.0}, 4), IllPosedError);
  CHECK_THROWS_AS(constraint_matrix(NullFamily::Normal, s, {0.0, 1.0}, 0), IllPosedError);
  CHECK_THROWS_AS(ConstraintMatrix(2, 2, {1.0, 2.0, 3.0}), DomainError);
}

TEST_CASE("el statistic requires enough observations") {
  const auto small = sample(Distribution::normal(), 26, 5);
  CHECK_THROWS_AS(el_statistic(NullFamily::Normal, small, ElVariant::EL1), IllPosedError);
  const auto ok = el_statistic(NullFamily::Normal, sample(Distribution::normal(), 27, 5),
                               ElVariant::EL2);
  CHECK(ok.m == 5);
  CHECK(ok.df == 3);
  ElOptions opt;
  opt.m = 3;
  const auto forced = el_statistic(NullFamily::Normal, small, ElVariant::EL1, opt);
  CHECK(forced.df == 1);
  opt.m = 2;
  CHECK_THROWS_AS(el_statistic(NullFamily::Normal, small, ElVariant::EL1, opt), IllPosedError);
}

TEST_CASE("el statistic is affine invariant") {
  for (auto family : {NullFamily::Normal, NullFamily::Logistic}) {
    const auto s = sample(Distribution::standard(family), 300, 2718);
    for (auto variant : {ElVariant::EL1, ElVariant::EL2}) {
      const double base = el_statistic(family, s, variant).statistic;
      std::vector<double> y;
      for (double v : s.values()) y.push_back(12.0 + 3.5 * v);
      CHECK(std::abs(el_statistic(family, Sample(y), variant).statistic - base) < 1e-8);
    }
  }
}

TEST_CASE("chi-square quantiles reproduce the critical value table") {
  struct Row {
    int df;
    double q95;
    double q99;
  };
  for (auto r : {Row{2, 5.99, 9.21}, Row{3, 7.81, 11.34}, Row{4, 9.49, 13.28},
                 Row{5, 11.07, 15.09}, Row{6, 12.59, 16.81}, Row{7, 14.07, 18.48}}) {
    CAPTURE(r.df);
    CHECK(std::abs(chi2_quantile(r.df, 0.95) - r.q95) < 0.005);
    CHECK(std::abs(chi2_quantile(r.df, 0.99) - r.q99) < 0.005);
  }
  CHECK(chi2_quantile(1, 0.95) == doctest::Approx(3.841458820694124).epsilon(1e-12));
  CHECK(chi2_quantile(10, 1e-10) > 0.0);
  CHECK(chi2_sf(3, chi2_quantile(3, 0.9)) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(chi2_sf(4, 0.0) == 1.0);
  CHECK_THROWS_AS(chi2_quantile(0, 0.5), DomainError);
  CHECK_THROWS_AS(chi2_quantile(3, 1.0), DomainError);
}

TEST_CASE("el decision rule") {
  const auto o = el_test(8.0, 3, 0.05);
  CHECK(o.reject);
  CHECK(o.m == 5);
  CHECK(o.p_value == doctest::Approx(chi2_sf(3, 8.0)));
  const auto inf = el_test(std::numeric_limits<double>::infinity(), 2, 0.01);
  CHECK(inf.reject);
  CHECK(inf.p_value == 0.0);
  CHECK_FALSE(el_test(5.0, 3, 0.05).reject);
  CHECK_THROWS_AS(el_test(std::nan(""), 3, 0.05), DomainError);
  CHECK_THROWS_AS(el_test(1.0, 3, 1.0), DomainError);
}
