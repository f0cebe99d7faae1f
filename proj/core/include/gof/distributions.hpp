#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gof {

enum class Family { Normal, Logistic, StudentT5, Cauchy, Laplace, NormalMixture };

/// The two families a location-scale null hypothesis can name.
enum class NullFamily { Normal, Logistic };

constexpr Family to_family(NullFamily f) noexcept {
  return f == NullFamily::Normal ? Family::Normal : Family::Logistic;
}

/// Throws UnsupportedFamilyError for families that cannot serve as a null.
NullFamily to_null_family(Family f);

std::string_view to_string(Family f) noexcept;
std::string_view to_string(NullFamily f) noexcept;

/// Parses the short names used in configs and on the command line:
/// normal, logistic, stt, cauchy, laplace, mtn (case-insensitive).
Family parse_family(std::string_view name);
NullFamily parse_null_family(std::string_view name);

/// A member of one of the six location-scale families. The mixture is
/// weight * N(location, scale^2) + (1 - weight) * N(location, second_scale^2).
class Distribution {
 public:
  static Distribution normal(double location = 0.0, double scale = 1.0);
  static Distribution logistic(double location = 0.0, double scale = 1.0);
  static Distribution student_t5(double location = 0.0, double scale = 1.0);
  static Distribution cauchy(double location = 0.0, double scale = 1.0);
  static Distribution laplace(double location = 0.0, double scale = 1.0);
  static Distribution normal_mixture(double location = 2.0, double scale = 5.0,
                                     double weight = 0.9, double second_scale = 15.0);
  static Distribution standard(NullFamily f);

  /// Builds any family with the default mixture extras when family is
  /// NormalMixture.
  static Distribution of(Family family, double location, double scale);

  Family family() const noexcept { return family_; }
  double location() const noexcept { return location_; }
  double scale() const noexcept { return scale_; }
  double weight() const noexcept { return weight_; }
  double second_scale() const noexcept { return second_scale_; }

  friend bool operator==(const Distribution&, const Distribution&) = default;

 private:
  Distribution(Family family, double location, double scale, double weight = 1.0,
               double second_scale = 1.0);

  Family family_;
  double location_;
  double scale_;
  double weight_;
  double second_scale_;
};

/// Immutable i.i.d. sample; order of observations is preserved.
class Sample {
 public:
  explicit Sample(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

 private:
  std::vector<double> values_;
};

double pdf(const Distribution& dist, double x);
double cdf(const Distribution& dist, double x);

/// Upper tail 1 - cdf, computed without cancellation for the families that
/// have a closed-form tail.
double survival(const Distribution& dist, double x);

/// Throws DomainError unless 0 < u < 1.
double quantile(const Distribution& dist, double u);

/// Deterministic draw of n observations for a given 64-bit seed.
Sample sample(const Distribution& dist, std::size_t n, std::uint64_t seed);

/// phi_0 = -f_0'/f_0 for the standardized null family.
double score_phi0(NullFamily family, double x);
double score_phi0(Family family, double x);

// Standard normal helpers shared by the transform and estimation code.
double normal_pdf(double x) noexcept;
double normal_cdf(double x) noexcept;
double normal_sf(double x) noexcept;
double normal_quantile(double u);

}  // namespace gof
