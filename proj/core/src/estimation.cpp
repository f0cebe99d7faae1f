#include "gof/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>

namespace gof {

namespace {

constexpr int kMaxNewtonIterations = 100;
constexpr int kPolishSteps = 2;
constexpr int kMaxHalvings = 60;

struct Moments {
  double mean;
  double sd;  // divisor n
  double range;
};

Moments two_pass_moments(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  double sum = 0.0;
  for (double v : x) sum += v;
  const double mean = sum / n;
  double ss = 0.0, comp = 0.0;
  for (double v : x) {
    const double d = v - mean;
    ss += d * d;
    comp += d;
  }
  // Corrected two-pass variance.
  const double var = std::max(0.0, (ss - comp * comp / n) / n);
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  return {mean, std::sqrt(var), *hi - *lo};
}

void check_spread(double sigma, double range, const char* who) {
  if (!(sigma >= 1e-12 * (range + 1.0))) {
    throw DegenerateSampleError(std::string(who) + ": sample has no spread");
  }
}

double logistic_log_density(double z) {
  const double a = std::abs(z);
  return -a - 2.0 * std::log1p(std::exp(-a));
}

double logistic_loglik(std::span<const double> x, double mu, double sigma) {
  double ll = 0.0;
  for (double v : x) ll += logistic_log_density((v - mu) / sigma);
  return ll - static_cast<double>(x.size()) * std::log(sigma);
}

struct LogisticScores {
  double s_mu;     // sum phi(z)
  double s_sigma;  // sum (z phi(z) - 1)
  double h11, h12, h22;  // sigma^2 * Hessian of loglik
};

LogisticScores logistic_scores(std::span<const double> x, double mu, double sigma) {
  LogisticScores s{0.0, 0.0, 0.0, 0.0, 0.0};
  for (double v : x) {
    const double z = (v - mu) / sigma;
    const double phi = std::tanh(0.5 * z);
    const double dphi = 0.5 * (1.0 - phi * phi);
    s.s_mu += phi;
    s.s_sigma += z * phi - 1.0;
    s.h11 -= dphi;
    s.h12 -= phi + z * dphi;
    s.h22 -= 2.0 * z * phi - 1.0 + z * z * dphi;
  }
  return s;
}

LocationScaleEstimate logistic_mle(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  const Moments m = two_pass_moments(x);
  check_spread(m.sd, m.range, "mle");

  LocationScaleEstimate est;
  est.mu_hat = m.mean;
  est.sigma_hat = m.sd * std::numbers::sqrt3 / std::numbers::pi;
  const double tol = 1e-10 * n;
  int polish = 0;

  for (int it = 0; it <= kMaxNewtonIterations; ++it) {
    const double mu = est.mu_hat, sigma = est.sigma_hat;
    const LogisticScores s = logistic_scores(x, mu, sigma);
    est.gradient_norm = std::hypot(s.s_mu, s.s_sigma);
    est.iterations = it;
    if (est.gradient_norm < tol) {
      est.converged = true;
      if (polish == kPolishSteps) break;
    }
    if (it == kMaxNewtonIterations) break;

    // Newton direction in (mu, sigma): delta = -H^{-1} g with g = scores / sigma
    // and H = h / sigma^2, i.e. delta = -sigma * h^{-1} scores.
    double dmu, dsigma;
    const double det = s.h11 * s.h22 - s.h12 * s.h12;
    if (s.h11 < 0.0 && det > 0.0) {
      dmu = -sigma * (s.h22 * s.s_mu - s.h12 * s.s_sigma) / det;
      dsigma = -sigma * (-s.h12 * s.s_mu + s.h11 * s.s_sigma) / det;
    } else {
      // Fisher scoring fallback; logistic information is diag(1/3, (pi^2+3)/9) / sigma^2.
      dmu = 3.0 * sigma * s.s_mu / n;
      dsigma = 9.0 * sigma * s.s_sigma / (n * (std::numbers::pi * std::numbers::pi + 3.0));
    }

    if (est.converged) {
      // Polishing: accept a full Newton step only if it does not worsen the score.
      ++polish;
      const double sigma_new = sigma + dsigma;
      if (!(sigma_new > 0.0)) break;
      const LogisticScores t = logistic_scores(x, mu + dmu, sigma_new);
      if (std::hypot(t.s_mu, t.s_sigma) > est.gradient_norm) break;
      est.mu_hat = mu + dmu;
      est.sigma_hat = sigma_new;
      continue;
    }

    const double ll_old = logistic_loglik(x, mu, sigma);
    const double slack = 1e-13 * (std::abs(ll_old) + n);
    double step = 1.0;
    bool accepted = false;
    for (int h = 0; h < kMaxHalvings; ++h, step *= 0.5) {
      const double sigma_new = sigma + step * dsigma;
      if (!(sigma_new > 0.0)) continue;
      const double mu_new = mu + step * dmu;
      if (logistic_loglik(x, mu_new, sigma_new) >= ll_old - slack) {
        est.mu_hat = mu_new;
        est.sigma_hat = sigma_new;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw NonConvergenceError("mle: logistic Newton line search failed", est);
    }
  }

  if (!est.converged) {
    throw NonConvergenceError("mle: logistic Newton did not converge in " +
                                  std::to_string(kMaxNewtonIterations) + " iterations",
                              est);
  }
  check_spread(est.sigma_hat, m.range, "mle");
  return est;
}

}  // namespace

LocationScaleEstimate mle(NullFamily family, const Sample& sample) {
  const auto x = sample.values();
  if (x.size() < 3) throw DomainError("mle: at least 3 observations are required");

  if (family == NullFamily::Normal) {
    const Moments m = two_pass_moments(x);
    check_spread(m.sd, m.range, "mle");
    LocationScaleEstimate est;
    est.mu_hat = m.mean;
    est.sigma_hat = m.sd;
    est.converged = true;
    // Closed form satisfies both normal score equations up to round-off.
    double s_mu = 0.0, s_sigma = 0.0;
    for (double v : x) {
      const double z = (v - m.mean) / m.sd;
      s_mu += z;
      s_sigma += z * z - 1.0;
    }
    est.gradient_norm = std::hypot(s_mu, s_sigma);
    return est;
  }
  return logistic_mle(x);
}

Residuals standardize(const Sample& sample, const LocationScaleEstimate& est) {
  if (!(est.sigma_hat > 0.0)) throw DomainError("standardize: sigma_hat must be positive");
  Residuals r;
  r.z.reserve(sample.size());
  for (double v : sample.values()) r.z.push_back((v - est.mu_hat) / est.sigma_hat);
  return r;
}

}  // namespace gof
