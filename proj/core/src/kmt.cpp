#include "gof/kmt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gof/numerics.hpp"

namespace gof {

namespace {

// ---------------------------------------------------------------------------
// Re(x) table

constexpr double kReLo = -40.0;
constexpr double kReHi = 40.0;
constexpr double kReStep = 0.01;
constexpr std::size_t kReNodes = 8001;

// s^2 phi0(s)^2 f0(s) for the standard logistic.
double re_integrand(double s) {
  const double e = std::exp(-std::abs(s));
  const double f = e / ((1.0 + e) * (1.0 + e));
  const double phi = std::tanh(0.5 * s);
  return s * s * phi * phi * f;
}

class ReTable {
 public:
  ReTable() : value_(kReNodes), slope_(kReNodes) {
    // Accumulate from the right so the tail keeps full relative accuracy.
    double acc = numerics::integrate(re_integrand, kReHi, kReHi + 100.0, 1e-16).value;
    value_[kReNodes - 1] = acc;
    slope_[kReNodes - 1] = -re_integrand(kReHi);
    for (std::size_t k = kReNodes - 1; k-- > 0;) {
      const double a = node(k), b = node(k + 1);
      acc += numerics::integrate(re_integrand, a, b, 1e-15).value;
      value_[k] = acc;
      slope_[k] = -re_integrand(a);
    }
  }

  double operator()(double x) const {
    if (x <= kReLo) return value_.front();
    if (x > kReHi) return 0.0;
    const double pos = (x - kReLo) / kReStep;
    std::size_t k = static_cast<std::size_t>(pos);
    if (k >= kReNodes - 1) k = kReNodes - 2;
    const double t = pos - static_cast<double>(k);
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    const double h10 = t3 - 2.0 * t2 + t;
    const double h01 = -2.0 * t3 + 3.0 * t2;
    const double h11 = t3 - t2;
    return h00 * value_[k] + h10 * kReStep * slope_[k] + h01 * value_[k + 1] +
           h11 * kReStep * slope_[k + 1];
  }

 private:
  static double node(std::size_t k) { return kReLo + kReStep * static_cast<double>(k); }

  std::vector<double> value_;
  std::vector<double> slope_;
};

const ReTable& re_table() {
  static const ReTable table;
  return table;
}

// ---------------------------------------------------------------------------
// Per-family Gamma entries in x-space.

struct LogisticParts {
  double e;    // e^x
  double sf;   // 1 - F(x)
  double f;    // density
  double s;    // int_x^inf phi^2 f
  double v1;   // int_x^inf phi (s phi - 1) f
  double v2;   // int_x^inf (s phi - 1)^2 f
};

LogisticParts logistic_parts(double x) {
  LogisticParts p{};
  p.e = std::exp(x);
  const double re = re_function(x);
  if (x > 0.0) {
    // Rewritten in u = e^{-x} to avoid cancellation in the upper tail.
    const double u = std::exp(-x);
    const double up = 1.0 + u;
    p.sf = u / up;
    p.f = u / (up * up);
    p.s = (3.0 + u * u) * u / (3.0 * up * up * up);
    p.v1 = x * u * (3.0 + u * u) / (3.0 * up * up * up) + std::log1p(u) / 3.0 -
           u / (3.0 * up * up);
  } else {
    const double e = p.e;
    const double ep = 1.0 + e;
    p.sf = 1.0 / ep;
    p.f = e / (ep * ep);
    p.s = (3.0 * e * e + 1.0) / (3.0 * ep * ep * ep);
    p.v1 = std::log1p(e) / 3.0 - e * (x * (3.0 + e * e) + ep) / (3.0 * ep * ep * ep);
  }
  p.v2 = std::max(0.0, re - p.sf - 2.0 * x * p.f);
  return p;
}

Matrix3 normal_gamma(double x) {
  const double f = normal_pdf(x);
  const double sf = normal_sf(x);
  const double xf = x * f;
  return {{{sf, f, xf},
           {f, xf + sf, (1.0 + x * x) * f},
           {xf, (1.0 + x * x) * f, (x * x * x + x) * f + 2.0 * sf}}};
}

Matrix3 logistic_gamma(double x) {
  const LogisticParts p = logistic_parts(x);
  const double xf = x * p.f;
  return {{{p.sf, p.f, xf}, {p.f, p.s, p.v1}, {xf, p.v1, p.v2}}};
}

void check_level(NullFamily family, double x, const char* who) {
  if (std::isnan(x)) throw DomainError(std::string(who) + ": argument is NaN");
  const double sf = survival(Distribution::standard(family), x);
  if (sf < (1.0 - kMaxTransformLevel) * (1.0 - 1e-9)) {
    throw DomainError(std::string(who) + ": F0(x) exceeds 1 - 1e-6");
  }
}

void check_det(double det, const char* who) {
  if (!(std::abs(det) >= 1e-300)) {
    throw SingularMatrixError(std::string(who) + ": lower 2x2 block of Gamma is singular");
  }
}

// Normal closed form. With F~ = 1 - F,
//   c1 = 1 / det(A22),   c2 = det(Gamma),
// and the three components of Gamma^{-1} l f are polynomial in (x, f, F~).
Vector3 normal_components(double x) {
  const double f = normal_pdf(x);
  const double sf = normal_sf(x);
  const double x2 = x * x, x3 = x2 * x, x4 = x2 * x2, x5 = x4 * x;
  const double f2 = f * f, f3 = f2 * f, f4 = f3 * f;
  const double s2 = sf * sf, s3 = s2 * sf, s4 = s3 * sf;

  const double det22 = -(x2 + 1.0) * f2 + (x3 + 3.0 * x) * f * sf + 2.0 * s2;
  check_det(det22, "integrand");
  const double c1 = 1.0 / det22;
  const double c2 = 2.0 * s3 + (x3 + 3.0 * x) * f * s2 - (2.0 * x2 + 3.0) * f2 * sf + x * f3;

  const double p1 = s2 + x * f * sf - f2;
  const double p2 = 4.0 * x * s4 + (2.0 * x4 + 8.0 * x2 - 2.0) * f * s3 +
                    (x5 - 7.0 * x) * f2 * s2 - (2.0 * x4 + 3.0 * x2 - 1.0) * f3 * sf +
                    (x3 + x) * f4;
  const double p3 = 2.0 * (x2 - 1.0) * s4 + (x5 + 2.0 * x3 - 9.0 * x) * f * s3 -
                    (4.0 * x4 + 9.0 * x2 - 5.0) * f2 * s2 + (5.0 * x3 + 9.0 * x) * f3 * sf -
                    2.0 * (x2 + 1.0) * f4;
  const double scale = f / c2;
  return {2.0 * scale * p1, scale * c1 * p2, scale * c1 * p3};
}

// Logistic closed form from the partitioned inverse. With e = e^x and
//   d  = [3(1+3e^2)(1+e)^3 v2 - 9(1+e)^6 v1^2]^{-1},
//   k1 = 3(1+e)^3 (v2 - x v1),   k2 = -3(1+e)^3 v1 + x(1+3e^2),
// A22^{-1} A21 = 3e(1+e) d (k1, k2)' and B11 = 1/(1-F - f (w1 + x w2)).
Vector3 logistic_components(double x) {
  const LogisticParts p = logistic_parts(x);
  const double e = p.e;
  const double ep = 1.0 + e;
  const double ep3 = ep * ep * ep;
  const double q = 1.0 + 3.0 * e * e;

  const double dinv = 3.0 * q * ep3 * p.v2 - 9.0 * ep3 * ep3 * p.v1 * p.v1;
  check_det(dinv / (9.0 * ep3 * ep3), "integrand");
  const double d = 1.0 / dinv;
  const double k1 = 3.0 * ep3 * (p.v2 - x * p.v1);
  const double k2 = -3.0 * ep3 * p.v1 + x * q;

  const double w_scale = 3.0 * e * ep * d;
  const double w1 = w_scale * k1;
  const double w2 = w_scale * k2;
  const double b11 = 1.0 / (p.sf - p.f * (w1 + x * w2));

  const double phi = std::tanh(0.5 * x);
  const double r1 = phi;
  const double r2 = x * phi - 1.0;
  const double kappa = b11 * (1.0 - (w1 * r1 + w2 * r2));
  const double inv_scale = 9.0 * ep3 * ep3 * d;
  const double a1 = inv_scale * (p.v2 * r1 - p.v1 * r2);
  const double a2 = inv_scale * (-p.v1 * r1 + p.s * r2);
  return {p.f * kappa, p.f * (a1 - kappa * w1), p.f * (a2 - kappa * w2)};
}

// Solves G g = b for symmetric positive definite G after scaling to unit
// diagonal, which is all the tail bases below need to stay well conditioned.
Vector3 solve_spd3(const Matrix3& g, const Vector3& b, const char* who) {
  Vector3 d{};
  for (int i = 0; i < 3; ++i) {
    if (!(g[i][i] > 0.0)) throw SingularMatrixError(std::string(who) + ": Gamma lost definiteness");
    d[i] = 1.0 / std::sqrt(g[i][i]);
  }
  double l[3][3] = {};
  for (int j = 0; j < 3; ++j) {
    double diag = g[j][j] * d[j] * d[j];
    for (int k = 0; k < j; ++k) diag -= l[j][k] * l[j][k];
    if (!(diag > 1e-300)) throw SingularMatrixError(std::string(who) + ": Gamma is singular");
    l[j][j] = std::sqrt(diag);
    for (int i = j + 1; i < 3; ++i) {
      double v = g[i][j] * d[i] * d[j];
      for (int k = 0; k < j; ++k) v -= l[i][k] * l[j][k];
      l[i][j] = v / l[j][j];
    }
  }
  Vector3 y{};
  for (int i = 0; i < 3; ++i) {
    double v = b[i] * d[i];
    for (int k = 0; k < i; ++k) v -= l[i][k] * y[k];
    y[i] = v / l[i][i];
  }
  Vector3 x{};
  for (int i = 3; i-- > 0;) {
    double v = y[i];
    for (int k = i + 1; k < 3; ++k) v -= l[k][i] * x[k];
    x[i] = v / l[i][i];
  }
  for (int i = 0; i < 3; ++i) x[i] *= d[i];
  return x;
}

// Upper-tail forms. Past these abscissae the closed forms lose digits to
// cancellation (1, phi0 and x phi0 - 1 become nearly collinear on [x, inf)),
// so Gamma^{-1} l f is recomputed in a basis adapted to the tail and mapped
// back. Both agree with the closed forms to ~1e-13 at the switch.
constexpr double kNormalTailFrom = 1.0;
constexpr double kLogisticTailFrom = 1.0;

// Normal: with y = s - x the tail basis is (1, y, y^2) and its Gram matrix is
// f(x) [J_{i+j}], J_k = int_0^inf y^k exp(-x y - y^2/2) dy, so
//   h = M'^{-1} [J]^{-1} e1,   M'^{-1} = [[1, -x, x^2+1], [0, 1, -2x], [0, 0, 1]].
Vector3 normal_tail_components(double x) {
  std::array<double, 5> j{};
  const double mills = normal_sf(x) / normal_pdf(x);
  if (x < 3.0) {
    j[0] = mills;
    j[1] = 1.0 - x * mills;
    for (int k = 2; k < 5; ++k) j[k] = (k - 1) * j[k - 2] - x * j[k - 1];
  } else {
    // J_k is the recessive solution of J_k = (k-1) J_{k-2} - x J_{k-1}, so run
    // the recurrence downward from a zero tail and normalize by J_0.
    constexpr int kTop = 60;
    std::array<double, kTop + 2> raw{};
    raw[kTop] = 1.0;
    for (int k = kTop + 1; k >= 2; --k) raw[k - 2] = (raw[k] + x * raw[k - 1]) / (k - 1);
    const double scale = mills / raw[0];
    for (int k = 0; k < 5; ++k) j[k] = raw[k] * scale;
  }
  const Matrix3 gram{{{j[0], j[1], j[2]}, {j[1], j[2], j[3]}, {j[2], j[3], j[4]}}};
  const Vector3 g = solve_spd3(gram, {1.0, 0.0, 0.0}, "integrand");
  return {g[0] - x * g[1] + (x * x + 1.0) * g[2], g[1] - 2.0 * x * g[2], g[2]};
}

// T(p, j) = int_x^inf (s - x)^p psi(s)^j f(s) ds with psi = 1 - phi0 = 2/(1+e^s),
// summed from the expansion of psi^j f in powers of e^{-s}.
double logistic_tail_moment(int p, int j, double u) {
  constexpr double kFact[] = {1.0, 1.0, 2.0};
  double sum = 0.0;
  double coef = 1.0;  // C(k + j + 1, j + 1)
  double upow = std::pow(u, j + 1);
  for (int k = 0; k < 400; ++k) {
    const double a = j + 1 + k;
    const double term = coef * upow / std::pow(a, p + 1);
    sum += (k % 2 == 0) ? term : -term;
    if (term < 1e-18 * std::abs(sum)) break;
    coef = coef * (k + j + 2) / (k + 1);
    upow *= u;
  }
  return std::ldexp(kFact[p] * sum, j);
}

// Logistic: tail basis (1, psi, (s - x) - s psi), related to l by
// l = M l~ with M = [[1,0,0], [1,-1,0], [x-1,0,1]].
Vector3 logistic_tail_components(double x) {
  const double u = std::exp(-x);
  double t[3][3];
  for (int p = 0; p < 3; ++p) {
    for (int j = 0; j < 3; ++j) t[p][j] = logistic_tail_moment(p, j, u);
  }
  const double a11 = t[0][0], a12 = t[0][1], a22 = t[0][2];
  const double a13 = t[1][0] - (x * t[0][1] + t[1][1]);
  const double a23 = t[1][1] - x * t[0][2] - t[1][2];
  const double a33 = t[2][0] - 2.0 * (x * t[1][1] + t[2][1]) +
                     (x * x * t[0][2] + 2.0 * x * t[1][2] + t[2][2]);
  const Matrix3 gram{{{a11, a12, a13}, {a12, a22, a23}, {a13, a23, a33}}};
  const double f = u / ((1.0 + u) * (1.0 + u));
  const double psi = 2.0 * u / (1.0 + u);
  const Vector3 g = solve_spd3(gram, {f, psi * f, -x * psi * f}, "integrand");
  return {g[0] + g[1] - (x - 1.0) * g[2], -g[1], g[2]};
}

double dot(const Vector3& a, const Vector3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

}  // namespace

// ---------------------------------------------------------------------------

Matrix3 GammaInverseBlocks::assembled() const noexcept {
  return {{{b11, b12[0], b12[1]},
           {b21[0], b22[0][0], b22[0][1]},
           {b21[1], b22[1][0], b22[1][1]}}};
}

double re_function(double x) {
  if (std::isnan(x)) throw DomainError("re_function: argument is NaN");
  return re_table()(x);
}

Vector3 score_vector(NullFamily family, double x) {
  const double phi = score_phi0(family, x);
  return {1.0, phi, x * phi - 1.0};
}

GammaMatrix gamma_matrix(NullFamily family, double x) {
  if (std::isnan(x)) throw DomainError("gamma_matrix: argument is NaN");
  GammaMatrix g;
  g.t = cdf(Distribution::standard(family), x);
  if (x == INFINITY) return g;
  // Beyond |x| = 1000 every density term underflows; clamping keeps the
  // polynomial factors finite so the closed forms reach their limits.
  x = std::clamp(x, -1000.0, 1000.0);
  g.entries = family == NullFamily::Normal ? normal_gamma(x) : logistic_gamma(x);
  return g;
}

GammaInverseBlocks gamma_inverse(NullFamily family, double x) {
  check_level(family, x, "gamma_inverse");
  const Matrix3 a = gamma_matrix(family, x).entries;

  // Column by column through the equilibrated Cholesky factor; the textbook
  // Schur-complement formula loses about two more digits in the upper tail.
  Matrix3 inv{};
  for (int c = 0; c < 3; ++c) {
    Vector3 e{};
    e[c] = 1.0;
    const Vector3 col = solve_spd3(a, e, "gamma_inverse");
    for (int r = 0; r < 3; ++r) inv[r][c] = col[r];
  }
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < r; ++c) inv[r][c] = inv[c][r] = 0.5 * (inv[r][c] + inv[c][r]);
  }

  GammaInverseBlocks b;
  b.b11 = inv[0][0];
  b.b12 = {inv[0][1], inv[0][2]};
  b.b21 = {inv[1][0], inv[2][0]};
  b.b22 = {{{inv[1][1], inv[1][2]}, {inv[2][1], inv[2][2]}}};
  return b;
}

Vector3 integrand_components(NullFamily family, double x) {
  check_level(family, x, "integrand");
  if (family == NullFamily::Normal) {
    return x >= kNormalTailFrom ? normal_tail_components(x) : normal_components(x);
  }
  return x >= kLogisticTailFrom ? logistic_tail_components(x) : logistic_components(x);
}

double integrand(NullFamily family, double z_hat, double x) {
  return dot(score_vector(family, z_hat), integrand_components(family, x));
}

// ---------------------------------------------------------------------------

TransformedProcess transformed_process(NullFamily family, const Residuals& residuals,
                                       double t_max, std::size_t grid_size) {
  const std::size_t n = residuals.z.size();
  if (n == 0) throw DomainError("transformed_process: residuals are empty");
  if (!(t_max > 0.0 && t_max <= kMaxTransformLevel)) {
    throw DomainError("transformed_process: t_max must lie in (0, 1 - 1e-6]");
  }
  if (grid_size < 2) throw DomainError("transformed_process: grid_size must be at least 2");
  for (double z : residuals.z) {
    if (!std::isfinite(z)) throw DomainError("transformed_process: residual is not finite");
  }

  const Distribution null_dist = Distribution::standard(family);
  const double z_max = quantile(null_dist, t_max);
  const double x_lo = quantile(null_dist, kLowerTruncationLevel);

  std::vector<double> sorted = residuals.z;
  std::sort(sorted.begin(), sorted.end());

  // Events are uniform grid levels (k >= 1) and distinct residuals <= z_max,
  // ordered by abscissa. Jumps carry the multiplicity and summed l(z_i).
  struct Event {
    double z;
    double t;
    std::size_t jump_count = 0;
    Vector3 jump_l{};
    Vector3 h{};
  };
  std::vector<Event> events;
  events.reserve(grid_size + n);
  for (std::size_t k = 1; k < grid_size; ++k) {
    const double t = t_max * static_cast<double>(k) / static_cast<double>(grid_size - 1);
    const double z = (k == grid_size - 1) ? z_max : quantile(null_dist, t);
    events.push_back({z, t});
  }
  Vector3 l_total{};
  for (double z : sorted) {
    const Vector3 l = score_vector(family, z);
    for (int c = 0; c < 3; ++c) l_total[c] += l[c];
    if (z > z_max) continue;
    if (!events.empty() && events.back().jump_count > 0 && events.back().z == z) {
      auto& ev = events.back();
      ++ev.jump_count;
      for (int c = 0; c < 3; ++c) ev.jump_l[c] += l[c];
      continue;
    }
    events.push_back({z, cdf(null_dist, z), 1, l});
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.z < b.z; });

  // H(z) accumulated panel by panel between consecutive abscissae.
  auto integrand_fn = [family](double x) { return integrand_components(family, x); };
  Vector3 h_acc{};
  double prev = x_lo;
  for (auto& ev : events) {
    if (ev.z > prev) {
      const auto r = numerics::integrate_vector<3>(integrand_fn, prev, ev.z, 1e-9);
      for (int c = 0; c < 3; ++c) h_acc[c] += r.value[c];
      prev = ev.z;
    }
    ev.h = ev.z > x_lo ? h_acc : Vector3{};
  }

  TransformedProcess proc;
  proc.grid.reserve(events.size() + 1);
  proc.values.reserve(events.size() + 1);
  proc.left_limits.reserve(events.size() + 1);
  proc.grid.push_back(0.0);
  proc.values.push_back(0.0);
  proc.left_limits.push_back(0.0);

  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  double count = 0.0;
  double sum_c = 0.0;   // sum over z_i <= z of l(z_i)' H(z_i)
  Vector3 s_gt = l_total;  // sum over z_i > z of l(z_i)
  for (const auto& ev : events) {
    const double left = (count - sum_c - dot(s_gt, ev.h)) * inv_sqrt_n;
    if (ev.jump_count > 0) {
      count += static_cast<double>(ev.jump_count);
      for (int c = 0; c < 3; ++c) s_gt[c] -= ev.jump_l[c];
      sum_c += dot(ev.jump_l, ev.h);
    }
    const double right = (count - sum_c - dot(s_gt, ev.h)) * inv_sqrt_n;

    if (ev.t <= proc.grid.back()) {
      // Same level as the previous entry (ties in t): keep its left limit.
      proc.values.back() = right;
    } else {
      proc.grid.push_back(ev.t);
      proc.values.push_back(right);
      proc.left_limits.push_back(left);
    }
  }
  // The t = 0 entry is exact; ties at t = 0 cannot move it.
  proc.values.front() = 0.0;
  proc.left_limits.front() = 0.0;

  double sup = 0.0;
  for (std::size_t i = 0; i < proc.values.size(); ++i) {
    sup = std::max({sup, std::abs(proc.values[i]), std::abs(proc.left_limits[i])});
  }
  proc.statistic = sup;
  return proc;
}

KmtStatistic kmt_statistic(NullFamily family, const Sample& sample, const KmtOptions& options) {
  if (sample.size() < 3) throw DomainError("kmt_statistic: at least 3 observations are required");
  KmtStatistic out;
  out.estimate = mle(family, sample);
  const Residuals r = standardize(sample, out.estimate);
  out.statistic = transformed_process(family, r, options.t_max, options.grid_size).statistic;
  return out;
}

double kmt_critical_value(double alpha) {
  if (std::abs(alpha - 0.05) < 1e-12) return kKmtCritical05;
  if (std::abs(alpha - 0.01) < 1e-12) return kKmtCritical01;
  throw DomainError("kmt: tabulated critical values exist only for alpha 0.05 and 0.01");
}

KmtOutcome kmt_test(double statistic, double alpha, std::optional<double> critical_value) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("kmt_test: alpha must lie in (0, 1)");
  if (std::isnan(statistic)) throw DomainError("kmt_test: statistic is NaN");
  KmtOutcome out;
  out.statistic = statistic;
  out.alpha = alpha;
  out.critical_value = critical_value ? *critical_value : kmt_critical_value(alpha);
  out.reject = statistic > out.critical_value;
  return out;
}

}  // namespace gof
