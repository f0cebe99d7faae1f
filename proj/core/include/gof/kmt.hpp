#pragma once

// Khmaladze martingale transform of the estimated empirical process for
// location-scale nulls (normal, logistic).
//
// With l(x) = (1, phi0(x), x phi0(x) - 1)' and t = F0(x), the 3x3 matrix
//   Gamma_t = int_x^inf l(s) l(s)' f0(s) ds
// is evaluated in closed form in x-space. The transformed process is
//   U_n(t) = n^{-1/2} sum_i { 1(z_i <= z) - l(z_i)' H(min(z, z_i)) },  t = F0(z),
// where H(z) = int_{-inf}^z Gamma_{F0(x)}^{-1} l(x) f0(x) dx.

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "gof/distributions.hpp"
#include "gof/estimation.hpp"

namespace gof {

using Matrix3 = std::array<std::array<double, 3>, 3>;
using Vector3 = std::array<double, 3>;

struct GammaMatrix {
  double t = 0.0;
  Matrix3 entries{};
};

/// Partitioned inverse of Gamma with the scalar (1,1) block split off.
struct GammaInverseBlocks {
  double b11 = 0.0;
  std::array<double, 2> b12{};
  std::array<double, 2> b21{};
  std::array<std::array<double, 2>, 2> b22{};

  Matrix3 assembled() const noexcept;
};

/// Largest t = F0(x) at which Gamma_t is inverted.
inline constexpr double kMaxTransformLevel = 1.0 - 1e-6;

/// Lower truncation level of the transform integrals; the integrand is O(f0)
/// in the lower tail.
inline constexpr double kLowerTruncationLevel = 1e-10;

/// l(x) = (1, phi0(x), x phi0(x) - 1).
Vector3 score_vector(NullFamily family, double x);

GammaMatrix gamma_matrix(NullFamily family, double x);

/// Schur-complement blocks of Gamma_{F0(x)}^{-1}.
///
/// Throws DomainError when F0(x) > 1 - 1e-6 and SingularMatrixError when Gamma
/// is numerically singular (Cholesky breakdown after scaling to unit diagonal).
GammaInverseBlocks gamma_inverse(NullFamily family, double x);

/// Gamma_{F0(x)}^{-1} l(x) f0(x) from the family-specific closed form.
Vector3 integrand_components(NullFamily family, double x);

/// l(z_hat)' Gamma_{F0(x)}^{-1} l(x) f0(x).
double integrand(NullFamily family, double z_hat, double x);

/// Re(x) = int_x^inf s^2 e^s (1 - e^s)^2 / (1 + e^s)^4 ds, served from a table
/// on [-40, 40] (spacing 0.01) with cubic Hermite interpolation. Clamped to
/// Re(-40) below the table and to 0 above it.
double re_function(double x);

struct TransformedProcess {
  /// Strictly increasing t-values in [0, t_max].
  std::vector<double> grid;
  /// Right-continuous values U_n(t).
  std::vector<double> values;
  /// Left limits U_n(t-); equal to values except at jumps F0(z_i).
  std::vector<double> left_limits;
  /// max |U_n| over values and left limits.
  double statistic = 0.0;
};

TransformedProcess transformed_process(NullFamily family, const Residuals& residuals,
                                       double t_max = kMaxTransformLevel,
                                       std::size_t grid_size = 1000);

struct KmtOptions {
  double t_max = kMaxTransformLevel;
  std::size_t grid_size = 1000;
};

struct KmtStatistic {
  double statistic = 0.0;
  LocationScaleEstimate estimate;
};

/// mle -> standardize -> transformed_process -> sup |U_n|.
KmtStatistic kmt_statistic(NullFamily family, const Sample& sample, const KmtOptions& options = {});

/// Tabulated sup-|Brownian motion| critical values.
inline constexpr double kKmtCritical05 = 2.24;
inline constexpr double kKmtCritical01 = 2.81;

struct KmtOutcome {
  double statistic = 0.0;
  double alpha = 0.05;
  double critical_value = kKmtCritical05;
  bool reject = false;
  std::optional<LocationScaleEstimate> estimate;
};

/// Critical value for alpha in {0.05, 0.01}; throws DomainError otherwise.
double kmt_critical_value(double alpha);

/// Decision rule: reject iff statistic > critical value. A user critical value
/// allows any alpha in (0, 1).
KmtOutcome kmt_test(double statistic, double alpha,
                    std::optional<double> critical_value = std::nullopt);

}  // namespace gof
