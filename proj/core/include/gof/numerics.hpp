#pragma once

// Shared numerical kernels: adaptive Simpson quadrature (scalar and
// vector-valued), regularized incomplete gamma, bracketed root finding and
// the seed-derivation contract used by the Monte Carlo harness.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "gof/error.hpp"

namespace gof::numerics {

struct QuadratureResult {
  double value = 0.0;
  double abs_error_estimate = 0.0;
  std::size_t panels = 0;
};

template <std::size_t N>
struct VectorQuadratureResult {
  std::array<double, N> value{};
  double abs_error_estimate = 0.0;  // max-norm, summed over panels
  std::size_t panels = 0;
};

inline constexpr int kMaxQuadratureDepth = 60;

/// Relative rounding floor of a panel estimate. Integrands here carry ~1e-14
/// relative evaluation noise, so finer error estimates are not meaningful.
inline constexpr double kQuadratureNoiseFloor = 2e-13;

/// Accepted-panel budget per call; exhausting it counts as non-convergence.
inline constexpr std::size_t kMaxQuadraturePanels = std::size_t{1} << 20;

namespace detail {

template <std::size_t N>
struct Panel {
  double a, b;
  std::array<double, N> fa, fm, fb, whole;
  int depth;
};

template <std::size_t N>
inline std::array<double, N> simpson(double width, const std::array<double, N>& fa,
                                     const std::array<double, N>& fm,
                                     const std::array<double, N>& fb) {
  std::array<double, N> out;
  for (std::size_t k = 0; k < N; ++k) out[k] = (fa[k] + 4.0 * fm[k] + fb[k]) * (width / 6.0);
  return out;
}

// Iterative adaptive Simpson. A panel is accepted when its Richardson error
// estimate drops below tol * width / (b - a), or below the rounding noise of
// the panel sum itself (bisecting further cannot reduce it). Accepted panels
// are summed in left-to-right order so results do not depend on the stack
// discipline.
template <std::size_t N, class F>
VectorQuadratureResult<N> adaptive_simpson(F&& f, double a, double b, double tol,
                                           bool& depth_exceeded) {
  VectorQuadratureResult<N> result;
  depth_exceeded = false;
  if (!(a < b)) return result;

  const double total = b - a;
  const double m = 0.5 * (a + b);
  const std::array<double, N> fa = f(a), fm = f(m), fb = f(b);
  std::vector<Panel<N>> stack;
  stack.push_back({a, b, fa, fm, fb, simpson<N>(total, fa, fm, fb), 0});

  while (!stack.empty()) {
    Panel<N> p = stack.back();
    stack.pop_back();
    const double mid = 0.5 * (p.a + p.b);
    const double lm = 0.5 * (p.a + mid);
    const double rm = 0.5 * (mid + p.b);
    const std::array<double, N> flm = f(lm), frm = f(rm);
    const double half = 0.5 * (p.b - p.a);
    const std::array<double, N> left = simpson<N>(half, p.fa, flm, p.fm);
    const std::array<double, N> right = simpson<N>(half, p.fm, frm, p.fb);

    double err = 0.0;
    bool noise_bound = true;
    std::array<double, N> refined;
    for (std::size_t k = 0; k < N; ++k) {
      const double two = left[k] + right[k];
      const double delta = (two - p.whole[k]) / 15.0;
      refined[k] = two + delta;
      err = std::max(err, std::abs(delta));
      const double mass = (std::abs(p.fa[k]) + 4.0 * (std::abs(flm[k]) + std::abs(frm[k])) +
                           2.0 * std::abs(p.fm[k]) + std::abs(p.fb[k])) *
                          (half / 6.0);
      if (std::abs(delta) > kQuadratureNoiseFloor * mass) {
        noise_bound = false;
      }
    }

    const double allowed = std::max(tol * (p.b - p.a) / total, noise_bound ? err : 0.0);
    const bool at_limit = p.depth + 1 >= kMaxQuadratureDepth || !(lm > p.a && rm < p.b) ||
                          result.panels + stack.size() >= kMaxQuadraturePanels;
    if (err <= allowed || at_limit) {
      if (err > allowed) depth_exceeded = true;
      for (std::size_t k = 0; k < N; ++k) result.value[k] += refined[k];
      result.abs_error_estimate += err;
      ++result.panels;
      continue;
    }
    // Right half pushed first so the left half is processed (and summed) first.
    stack.push_back({mid, p.b, p.fm, frm, p.fb, right, p.depth + 1});
    stack.push_back({p.a, mid, p.fa, flm, p.fm, left, p.depth + 1});
  }
  return result;
}

}  // namespace detail

/// Adaptive Simpson quadrature of a scalar function over [a, b].
///
/// Throws QuadratureError (carrying the best estimate) when some panel still
/// misses its error budget at the maximum bisection depth.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, double tol) {
  if (!(a <= b)) throw DomainError("integrate: require a <= b");
  if (!(tol > 0.0)) throw DomainError("integrate: tolerance must be positive");
  bool depth_exceeded = false;
  auto wrapped = [&f](double x) { return std::array<double, 1>{f(x)}; };
  auto r = detail::adaptive_simpson<1>(wrapped, a, b, tol, depth_exceeded);
  if (depth_exceeded) {
    throw QuadratureError("integrate: maximum depth reached before tolerance", r.value[0]);
  }
  return {r.value[0], r.abs_error_estimate, r.panels};
}

/// Componentwise adaptive Simpson for an integrand returning std::array<double, N>.
/// The error criterion uses the max-norm across components.
template <std::size_t N, class F>
VectorQuadratureResult<N> integrate_vector(F&& f, double a, double b, double tol) {
  if (!(a <= b)) throw DomainError("integrate_vector: require a <= b");
  if (!(tol > 0.0)) throw DomainError("integrate_vector: tolerance must be positive");
  bool depth_exceeded = false;
  auto r = detail::adaptive_simpson<N>(f, a, b, tol, depth_exceeded);
  if (depth_exceeded) {
    throw QuadratureError("integrate_vector: maximum depth reached before tolerance",
                          r.value[0]);
  }
  return r;
}

/// Regularized lower incomplete gamma P(s, x).
double regularized_gamma_lower(double s, double x);

/// Regularized upper incomplete gamma Q(s, x) = 1 - P(s, x), computed without
/// cancellation in the upper tail.
double regularized_gamma_upper(double s, double x);

/// Brent-style bracketed root finder (bisection, secant and inverse quadratic
/// steps). Stops when the bracket is narrower than tol or f hits zero exactly.
double find_root(const std::function<double(double)>& f, double lo, double hi, double tol);

/// Mixes (master, cell, replication) into a stream seed. Each stage is a
/// splitmix64 finalizer, which is a bijection on 64-bit words, so seeds for
/// different replications of one cell never collide. The mixing constants
/// are part of the reproducibility contract and must not change.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t replication);

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace gof::numerics
