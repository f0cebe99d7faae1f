#include "gof/distributions.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include "gof/error.hpp"
#include "gof/numerics.hpp"
#include "gof/rng.hpp"

namespace gof {

namespace {

constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kPi = std::numbers::pi;
constexpr double kSqrt5 = 2.23606797749978969640917366873;

// Student-t with 5 degrees of freedom, standardized.
constexpr double kT5Norm = 8.0 / (3.0 * kPi * kSqrt5);

double t5_pdf(double z) {
  const double q = 1.0 + z * z / 5.0;
  return kT5Norm / (q * q * q);
}

// Closed form for odd degrees of freedom: with theta = atan(z / sqrt(5)),
// F(z) = 1/2 + [theta + sin(theta) cos(theta) (1 + 2/3 cos^2(theta))] / pi.
double t5_cdf(double z) {
  const double theta = std::atan(z / kSqrt5);
  const double s = std::sin(theta), c = std::cos(theta);
  return 0.5 + (theta + s * c * (1.0 + 2.0 / 3.0 * c * c)) / kPi;
}

double laplace_cdf(double z) { return z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z); }

void require_open_unit(double u, const char* who) {
  if (!(u > 0.0 && u < 1.0)) {
    throw DomainError(std::string(who) + ": probability must lie in (0, 1)");
  }
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Standard normal

double normal_pdf(double x) noexcept {
  if (std::isinf(x)) return 0.0;
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_sf(double x) noexcept { return 0.5 * std::erfc(x / kSqrt2); }

// Acklam's rational approximation (relative error 1.15e-9) refined by one
// Halley step against erfc, which brings it to near machine precision.
double normal_quantile(double u) {
  require_open_unit(u, "normal_quantile");
  static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02,
                                           -2.759285104469687e+02, 1.383577518672690e+02,
                                           -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02,
                                           -1.556989798598866e+02, 6.680131188771972e+01,
                                           -1.328068155288572e+01};
  static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01,
                                           -2.400758277161838e+00, -2.549671348283430e+00,
                                           4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01,
                                           2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  // Work in the lower half so the refinement sees an exact tail probability.
  const bool upper = u > 0.5;
  const double p = upper ? 1.0 - u : u;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }

  const double e = normal_cdf(x) - p;
  const double step = e * std::sqrt(2.0 * kPi) * std::exp(0.5 * x * x);
  x -= step / (1.0 + 0.5 * x * step);
  return upper ? -x : x;
}

// ---------------------------------------------------------------------------
// Names

std::string_view to_string(Family f) noexcept {
  switch (f) {
    case Family::Normal: return "normal";
    case Family::Logistic: return "logistic";
    case Family::StudentT5: return "stt";
    case Family::Cauchy: return "cauchy";
    case Family::Laplace: return "laplace";
    case Family::NormalMixture: return "mtn";
  }
  return "unknown";
}

std::string_view to_string(NullFamily f) noexcept { return to_string(to_family(f)); }

Family parse_family(std::string_view name) {
  const std::string s = lower(name);
  if (s == "normal") return Family::Normal;
  if (s == "logistic") return Family::Logistic;
  if (s == "stt" || s == "t5" || s == "student_t5") return Family::StudentT5;
  if (s == "cauchy") return Family::Cauchy;
  if (s == "laplace") return Family::Laplace;
  if (s == "mtn" || s == "mixture" || s == "normal_mixture") return Family::NormalMixture;
  throw DomainError("unknown distribution family '" + std::string(name) + "'");
}

NullFamily parse_null_family(std::string_view name) { return to_null_family(parse_family(name)); }

NullFamily to_null_family(Family f) {
  switch (f) {
    case Family::Normal: return NullFamily::Normal;
    case Family::Logistic: return NullFamily::Logistic;
    default:
      throw UnsupportedFamilyError("family '" + std::string(to_string(f)) +
                                   "' is not a supported null family (normal, logistic)");
  }
}

// ---------------------------------------------------------------------------
// Distribution / Sample

Distribution::Distribution(Family family, double location, double scale, double weight,
                           double second_scale)
    : family_(family),
      location_(location),
      scale_(scale),
      weight_(weight),
      second_scale_(second_scale) {
  if (!std::isfinite(location)) throw DomainError("Distribution: location must be finite");
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw DomainError("Distribution: scale must be positive and finite");
  }
  if (family == Family::NormalMixture) {
    if (!(weight > 0.0 && weight < 1.0)) {
      throw DomainError("Distribution: mixture weight must lie in (0, 1)");
    }
    if (!(second_scale > 0.0) || !std::isfinite(second_scale)) {
      throw DomainError("Distribution: second scale must be positive and finite");
    }
  }
}

Distribution Distribution::normal(double location, double scale) {
  return {Family::Normal, location, scale};
}
Distribution Distribution::logistic(double location, double scale) {
  return {Family::Logistic, location, scale};
}
Distribution Distribution::student_t5(double location, double scale) {
  return {Family::StudentT5, location, scale};
}
Distribution Distribution::cauchy(double location, double scale) {
  return {Family::Cauchy, location, scale};
}
Distribution Distribution::laplace(double location, double scale) {
  return {Family::Laplace, location, scale};
}
Distribution Distribution::normal_mixture(double location, double scale, double weight,
                                          double second_scale) {
  return {Family::NormalMixture, location, scale, weight, second_scale};
}
Distribution Distribution::standard(NullFamily f) {
  return f == NullFamily::Normal ? normal() : logistic();
}

Distribution Distribution::of(Family family, double location, double scale) {
  if (family == Family::NormalMixture) return normal_mixture(location, scale);
  return {family, location, scale};
}

Sample::Sample(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw DomainError("Sample: at least one observation is required");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw DomainError("Sample: observation " + std::to_string(i) + " is not finite");
    }
  }
}

// ---------------------------------------------------------------------------
// pdf / cdf / survival / quantile

double pdf(const Distribution& dist, double x) {
  if (std::isinf(x)) return 0.0;
  const double s = dist.scale();
  const double z = (x - dist.location()) / s;
  switch (dist.family()) {
    case Family::Normal: return normal_pdf(z) / s;
    case Family::Logistic: {
      const double e = std::exp(-std::abs(z));
      return e / ((1.0 + e) * (1.0 + e)) / s;
    }
    case Family::StudentT5: return t5_pdf(z) / s;
    case Family::Cauchy: return 1.0 / (kPi * (1.0 + z * z)) / s;
    case Family::Laplace: return 0.5 * std::exp(-std::abs(z)) / s;
    case Family::NormalMixture: {
      const double s2 = dist.second_scale();
      const double z2 = (x - dist.location()) / s2;
      return dist.weight() * normal_pdf(z) / s + (1.0 - dist.weight()) * normal_pdf(z2) / s2;
    }
  }
  return 0.0;
}

double cdf(const Distribution& dist, double x) {
  if (std::isnan(x)) throw DomainError("cdf: argument is NaN");
  if (x == -INFINITY) return 0.0;
  if (x == INFINITY) return 1.0;
  const double z = (x - dist.location()) / dist.scale();
  switch (dist.family()) {
    case Family::Normal: return normal_cdf(z);
    case Family::Logistic: return 1.0 / (1.0 + std::exp(-z));
    case Family::StudentT5: return t5_cdf(z);
    case Family::Cauchy: return std::atan2(1.0, -z) / kPi;
    case Family::Laplace: return laplace_cdf(z);
    case Family::NormalMixture: {
      const double z2 = (x - dist.location()) / dist.second_scale();
      return dist.weight() * normal_cdf(z) + (1.0 - dist.weight()) * normal_cdf(z2);
    }
  }
  return 0.0;
}

double survival(const Distribution& dist, double x) {
  if (std::isnan(x)) throw DomainError("survival: argument is NaN");
  if (x == -INFINITY) return 1.0;
  if (x == INFINITY) return 0.0;
  const double z = (x - dist.location()) / dist.scale();
  switch (dist.family()) {
    case Family::Normal: return normal_sf(z);
    case Family::Logistic: return 1.0 / (1.0 + std::exp(z));
    case Family::StudentT5: return t5_cdf(-z);
    case Family::Cauchy: return std::atan2(1.0, z) / kPi;
    case Family::Laplace: return laplace_cdf(-z);
    case Family::NormalMixture: {
      const double z2 = (x - dist.location()) / dist.second_scale();
      return dist.weight() * normal_sf(z) + (1.0 - dist.weight()) * normal_sf(z2);
    }
  }
  return 0.0;
}

double quantile(const Distribution& dist, double u) {
  require_open_unit(u, "quantile");
  const double loc = dist.location();
  const double s = dist.scale();
  switch (dist.family()) {
    case Family::Normal: return loc + s * normal_quantile(u);
    case Family::Logistic: return loc + s * (std::log(u) - std::log1p(-u));
    case Family::Cauchy: return loc + s * std::tan(kPi * (u - 0.5));
    case Family::Laplace:
      return u < 0.5 ? loc + s * std::log(2.0 * u) : loc - s * std::log(2.0 * (1.0 - u));
    case Family::StudentT5: {
      if (u == 0.5) return loc;
      // The t5 quantile lies between the normal and Cauchy quantiles.
      const double zn = normal_quantile(u);
      const double zc = std::tan(kPi * (u - 0.5));
      const double lo = std::min(zn, zc), hi = std::max(zn, zc);
      const double z = numerics::find_root([u](double t) { return t5_cdf(t) - u; }, lo, hi,
                                           1e-14 * (1.0 + std::abs(hi)));
      return loc + s * z;
    }
    case Family::NormalMixture: {
      const double q1 = loc + s * normal_quantile(u);
      const double q2 = loc + dist.second_scale() * normal_quantile(u);
      double lo = std::min(q1, q2), hi = std::max(q1, q2);
      if (lo == hi) return lo;
      const double width = hi - lo;
      lo -= 1e-9 * width;
      hi += 1e-9 * width;
      return numerics::find_root([&dist, u](double x) { return cdf(dist, x) - u; }, lo, hi,
                                 1e-13 * (1.0 + std::max(std::abs(lo), std::abs(hi))));
    }
  }
  return loc;
}

// ---------------------------------------------------------------------------
// Sampling

Sample sample(const Distribution& dist, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DomainError("sample: n must be at least 1");
  Philox4x32 rng(seed);
  std::vector<double> out(n);
  const double loc = dist.location();
  const double s = dist.scale();
  for (auto& x : out) {
    switch (dist.family()) {
      case Family::Normal:
      case Family::Logistic:
      case Family::Cauchy:
      case Family::Laplace: x = quantile(dist, uniform_open01(rng)); break;
      case Family::StudentT5: {
        const double z = normal_quantile(uniform_open01(rng));
        double chi2 = 0.0;
        for (int k = 0; k < 5; ++k) {
          const double g = normal_quantile(uniform_open01(rng));
          chi2 += g * g;
        }
        x = loc + s * z / std::sqrt(chi2 / 5.0);
        break;
      }
      case Family::NormalMixture: {
        const bool first = uniform_open01(rng) < dist.weight();
        const double z = normal_quantile(uniform_open01(rng));
        x = loc + (first ? s : dist.second_scale()) * z;
        break;
      }
    }
  }
  return Sample(std::move(out));
}

// ---------------------------------------------------------------------------
// Score

double score_phi0(NullFamily family, double x) {
  if (std::isnan(x)) throw DomainError("score_phi0: argument is NaN");
  switch (family) {
    case NullFamily::Normal: return x;
    // (e^x - 1)/(e^x + 1) == tanh(x/2); saturates to +-1 without overflow.
    case NullFamily::Logistic: return std::tanh(0.5 * x);
  }
  return 0.0;
}

double score_phi0(Family family, double x) { return score_phi0(to_null_family(family), x); }

}  // namespace gof
