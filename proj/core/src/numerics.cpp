#include "gof/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace gof::numerics {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = 1e-300;
constexpr int kMaxTerms = 10000;

// log of x^s e^{-x} / Gamma(s)
double log_gamma_prefactor(double s, double x) { return s * std::log(x) - x - std::lgamma(s); }

// Series for P(s, x); converges quickly for x < s + 1.
double gamma_series(double s, double x) {
  double term = 1.0 / s;
  double sum = term;
  double ap = s;
  for (int k = 0; k < kMaxTerms; ++k) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps * 0.5) break;
  }
  return sum * std::exp(log_gamma_prefactor(s, x));
}

// Modified Lentz continued fraction for Q(s, x); used for x >= s + 1.
double gamma_continued_fraction(double s, double x) {
  double b = x + 1.0 - s;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxTerms; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps * 0.5) break;
  }
  return std::exp(log_gamma_prefactor(s, x)) * h;
}

void check_gamma_args(double s, double x, const char* who) {
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw DomainError(std::string(who) + ": shape must be positive and finite");
  }
  if (std::isnan(x) || x < 0.0) throw DomainError(std::string(who) + ": x must be >= 0");
}

}  // namespace

double regularized_gamma_lower(double s, double x) {
  check_gamma_args(s, x, "regularized_gamma_lower");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < s + 1.0) return std::clamp(gamma_series(s, x), 0.0, 1.0);
  return std::clamp(1.0 - gamma_continued_fraction(s, x), 0.0, 1.0);
}

double regularized_gamma_upper(double s, double x) {
  check_gamma_args(s, x, "regularized_gamma_upper");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < s + 1.0) return std::clamp(1.0 - gamma_series(s, x), 0.0, 1.0);
  return std::clamp(gamma_continued_fraction(s, x), 0.0, 1.0);
}

double find_root(const std::function<double(double)>& f, double lo, double hi, double tol) {
  if (!(tol > 0.0)) throw DomainError("find_root: tolerance must be positive");
  double a = lo, b = hi;
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (std::isnan(fa) || std::isnan(fb) || (fa > 0.0) == (fb > 0.0)) {
    throw BracketError("find_root: f(lo) and f(hi) do not bracket a root");
  }

  double c = a, fc = fa;
  double d = b - a, e = d;
  for (int iter = 0; iter < 500; ++iter) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol1 = 2.0 * kEps * std::abs(b) + 0.5 * tol;
    const double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || fb == 0.0) return b;

    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      double p, q;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        const double qa = fa / fc;
        const double r = fb / fc;
        p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
        q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      const double min1 = 3.0 * xm * q - std::abs(tol1 * q);
      const double min2 = std::abs(e * q);
      if (2.0 * p < std::min(min1, min2)) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += (std::abs(d) > tol1) ? d : std::copysign(tol1, xm);
    fb = f(b);
  }
  return b;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t replication) {
  return mix64(mix64(mix64(master) ^ cell) ^ replication);
}

}  // namespace gof::numerics
