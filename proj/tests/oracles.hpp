#pragma once

// Reference computations kept independent of the library paths they check:
// plain composite Simpson rules and Gaussian elimination.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "gof/distributions.hpp"
#include "gof/el.hpp"
#include "gof/kmt.hpp"

namespace oracle {

using gof::Matrix3;
using gof::Vector3;

template <class F>
double simpson(F&& f, double a, double b, std::size_t panels) {
  const double h = (b - a) / static_cast<double>(2 * panels);
  double s = f(a) + f(b);
  for (std::size_t k = 1; k < 2 * panels; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + h * k);
  return s * h / 3.0;
}

inline Vector3 l_vector(gof::NullFamily family, double s) {
  const double p = gof::score_phi0(family, s);
  return {1.0, p, s * p - 1.0};
}

// Gamma_x = int_x^inf l l' f0 ds, truncated where f0 is below 1e-30 relative.
inline Matrix3 gamma_by_quadrature(gof::NullFamily family, double x) {
  const auto dist = gof::Distribution::standard(family);
  const double upper = family == gof::NullFamily::Normal ? 14.0 : 80.0;
  Matrix3 g{};
  if (x >= upper) return g;
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      auto f = [&](double s) {
        const auto l = l_vector(family, s);
        return l[i] * l[j] * gof::pdf(dist, s);
      };
      g[i][j] = g[j][i] = simpson(f, x, upper, 20000);
    }
  }
  return g;
}

// Inverse by Gauss-Jordan elimination with partial pivoting.
inline Matrix3 invert(const Matrix3& m) {
  std::array<std::array<double, 6>, 3> a{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) a[i][j] = m[i][j];
    a[i][3 + i] = 1.0;
  }
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    if (a[piv][c] == 0.0) throw std::runtime_error("oracle::invert: singular");
    std::swap(a[c], a[piv]);
    const double d = a[c][c];
    for (auto& v : a[c]) v /= d;
    for (int r = 0; r < 3; ++r) {
      if (r == c) continue;
      const double f = a[r][c];
      for (int k = 0; k < 6; ++k) a[r][k] -= f * a[c][k];
    }
  }
  Matrix3 inv{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) inv[i][j] = a[i][3 + j];
  }
  return inv;
}

inline Matrix3 multiply(const Matrix3& a, const Matrix3& b) {
  Matrix3 c{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
    }
  }
  return c;
}

inline Vector3 apply(const Matrix3& a, const Vector3& v) {
  Vector3 out{};
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) out[i] += a[i][k] * v[k];
  }
  return out;
}

inline double max_abs(const Matrix3& m) {
  double s = 0.0;
  for (const auto& row : m) {
    for (double v : row) s = std::max(s, std::abs(v));
  }
  return s;
}

// Maximizes sum log(n p_i) over {p > 0, sum p = 1, sum p_i g_i = 0} by a
// zooming grid search in the affine null space (dimension 1 or 2). Returns
// -2 sum log(n p_i) at the best grid point.
inline double primal_grid_search(const gof::ConstraintMatrix& g) {
  const std::size_t n = g.n(), m = g.m();
  const std::size_t rows = m + 1;
  // A p = e1 with A = [1'; g'].
  std::vector<std::vector<double>> a(rows, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    a[0][i] = 1.0;
    for (std::size_t h = 0; h < m; ++h) a[h + 1][i] = g(i, h);
  }
  // Orthonormal basis of the row space, then its complement.
  std::vector<std::vector<double>> basis;
  auto orthogonalize = [&](std::vector<double> v) {
    for (const auto& b : basis) {
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) d += v[i] * b[i];
      for (std::size_t i = 0; i < n; ++i) v[i] -= d * b[i];
    }
    double nrm = 0.0;
    for (double x : v) nrm += x * x;
    nrm = std::sqrt(nrm);
    if (nrm < 1e-10) return false;
    for (double& x : v) x /= nrm;
    basis.push_back(v);
    return true;
  };
  for (const auto& r : a) {
    if (!orthogonalize(r)) throw std::runtime_error("oracle::primal_grid_search: dependent rows");
  }
  std::vector<std::vector<double>> null_space;
  for (std::size_t k = 0; k < n && basis.size() < n; ++k) {
    std::vector<double> e(n, 0.0);
    e[k] = 1.0;
    if (orthogonalize(e)) null_space.push_back(basis.back());
  }
  const std::size_t dim = null_space.size();
  if (dim != 1 && dim != 2) throw std::runtime_error("oracle::primal_grid_search: need dim 1 or 2");

  // Start from the projection of the uniform weights onto {A p = e1}.
  std::vector<double> p0(n, 1.0 / static_cast<double>(n));
  {
    std::vector<double> r(rows, 0.0);
    for (std::size_t h = 1; h < rows; ++h) {
      for (std::size_t i = 0; i < n; ++i) r[h] += a[h][i] / static_cast<double>(n);
    }
    // Solve (A A') y = r by Gaussian elimination, p0 -= A' y.
    std::vector<std::vector<double>> aat(rows, std::vector<double>(rows + 1, 0.0));
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < rows; ++j) {
        for (std::size_t k = 0; k < n; ++k) aat[i][j] += a[i][k] * a[j][k];
      }
      aat[i][rows] = r[i];
    }
    for (std::size_t c = 0; c < rows; ++c) {
      std::size_t piv = c;
      for (std::size_t q = c + 1; q < rows; ++q) {
        if (std::abs(aat[q][c]) > std::abs(aat[piv][c])) piv = q;
      }
      std::swap(aat[c], aat[piv]);
      for (std::size_t q = 0; q < rows; ++q) {
        if (q == c) continue;
        const double f = aat[q][c] / aat[c][c];
        for (std::size_t k = c; k <= rows; ++k) aat[q][k] -= f * aat[c][k];
      }
    }
    for (std::size_t i = 0; i < rows; ++i) {
      const double y = aat[i][rows] / aat[i][i];
      for (std::size_t k = 0; k < n; ++k) p0[k] -= a[i][k] * y;
    }
  }

  auto objective = [&](double c0, double c1) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = p0[i] + c0 * null_space[0][i] + (dim == 2 ? c1 * null_space[1][i] : 0.0);
      if (!(p > 0.0)) return -std::numeric_limits<double>::infinity();
      s += std::log(static_cast<double>(n) * p);
    }
    return s;
  };

  double best_c0 = 0.0, best_c1 = 0.0, best = objective(0.0, 0.0);
  double half = 1.0;
  const int k = 100;
  for (int round = 0; round < 25; ++round) {
    const double c0 = best_c0, c1 = best_c1;
    for (int i = -k; i <= k; ++i) {
      for (int j = (dim == 2 ? -k : 0); j <= (dim == 2 ? k : 0); ++j) {
        const double a0 = c0 + half * i / k, a1 = c1 + half * j / k;
        const double v = objective(a0, a1);
        if (v > best) {
          best = v;
          best_c0 = a0;
          best_c1 = a1;
        }
      }
    }
    half *= 0.2;
  }
  return -2.0 * best;
}

}  // namespace oracle
