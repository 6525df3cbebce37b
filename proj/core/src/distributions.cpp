#include "dolda/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "dolda/error.hpp"

namespace dolda {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Below this the gamma CDF at the truncation point is too small to invert.
constexpr double kMinInvertibleMass = 1e-300;

double below(double upper) { return std::nextafter(upper, 0.0); }

// Positive-side draw of N(mean, 1) restricted to (0, inf).
double truncated_normal_positive(double mean, RngStream& rng) {
  const double lower = -mean;  // bound for the standardized variable
  for (;;) {
    double x;
    if (lower <= 0.0) {
      // Inverse CDF in the upper tail form; the mode lies inside the region.
      const double mass = normal_cdf(mean);
      x = mean - normal_quantile(rng.uniform() * mass);
    } else {
      const double rate = 0.5 * (lower + std::sqrt(lower * lower + 4.0));
      double z;
      for (;;) {
        z = lower - std::log(rng.uniform()) / rate;
        const double d = z - rate;
        if (std::log(rng.uniform()) <= -0.5 * d * d) break;
      }
      x = mean + z;
    }
    if (x > 0.0 && std::isfinite(x)) return x;
  }
}

}  // namespace

double normal_cdf(double x) {
  return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
}

double normal_log_cdf(double x) {
  if (x > 0.0) return std::log1p(-0.5 * std::erfc(x * std::numbers::sqrt2 / 2.0));
  if (x > -37.0) return std::log(normal_cdf(x));
  // Asymptotic series of Mills' ratio for the far lower tail.
  const double r = 1.0 / (x * x);
  const double series =
      1.0 - r + 3.0 * r * r - 15.0 * r * r * r + 105.0 * r * r * r * r;
  return -0.5 * x * x - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) +
         std::log(series);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -kInf;
    if (p == 1.0) return kInf;
    throw ValidationError("normal_quantile: probability outside [0, 1]");
  }
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -kInf;
  const double m = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

double sample_truncated_normal(double mean, Side side, RngStream& rng) {
  if (!std::isfinite(mean)) {
    throw ValidationError("sample_truncated_normal: non-finite mean");
  }
  if (side == Side::kPositive) return truncated_normal_positive(mean, rng);
  return -truncated_normal_positive(-mean, rng);
}

double sample_log_gamma(double shape, RngStream& rng) {
  if (shape >= 1.0) {
    std::gamma_distribution<double> gamma(shape, 1.0);
    return std::log(gamma(rng));
  }
  // G(a) = G(a + 1) * U^(1/a), kept in log space so tiny shapes never
  // underflow to an exact zero.
  std::gamma_distribution<double> gamma(shape + 1.0, 1.0);
  return std::log(gamma(rng)) + std::log(rng.uniform()) / shape;
}

void sample_dirichlet(std::span<const double> concentration, RngStream& rng,
                      std::span<double> out) {
  if (concentration.empty() || out.size() != concentration.size()) {
    throw ValidationError("sample_dirichlet: size mismatch or empty input");
  }
  for (double c : concentration) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw ValidationError("sample_dirichlet: concentration must be positive");
    }
  }
  if (concentration.size() == 1) {
    out[0] = 1.0;
    return;
  }
  double max_log = -kInf;
  for (std::size_t i = 0; i < concentration.size(); ++i) {
    out[i] = sample_log_gamma(concentration[i], rng);
    max_log = std::max(max_log, out[i]);
  }
  double total = 0.0;
  for (double& v : out) {
    v = std::exp(v - max_log);
    total += v;
  }
  for (double& v : out) v /= total;
}

std::vector<double> sample_dirichlet(std::span<const double> concentration,
                                     RngStream& rng) {
  std::vector<double> out(concentration.size());
  sample_dirichlet(concentration, rng, out);
  return out;
}

std::size_t sample_categorical_unnormalized(std::span<const double> weights,
                                            RngStream& rng) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ValidationError("sample_categorical: weights must be finite and >= 0");
    }
    total += w;
  }
  if (!(total > 0.0)) {
    throw ValidationError("sample_categorical: all weights are zero");
  }
  const double target = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    acc += weights[k];
    last_positive = k;
    if (target < acc) return k;
  }
  return last_positive;
}

Eigen::VectorXd sample_mvn_by_precision(const Eigen::MatrixXd& precision,
                                        const Eigen::VectorXd& linear_term,
                                        RngStream& rng) {
  const Eigen::Index n = precision.rows();
  if (precision.cols() != n || linear_term.size() != n) {
    throw ValidationError("sample_mvn_by_precision: dimension mismatch");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success || !llt.matrixLLT().diagonal().allFinite()) {
    throw NumericalError("precision not SPD");
  }
  Eigen::VectorXd mean = llt.solve(linear_term);
  Eigen::VectorXd noise(n);
  for (Eigen::Index i = 0; i < n; ++i) noise[i] = rng.normal();
  // Q = L L^T, so L^-T z has covariance Q^-1.
  return mean + llt.matrixU().solve(noise);
}

double sample_truncated_gamma(double shape, double rate, double upper,
                              RngStream& rng) {
  if (!(shape > 0.0) || !std::isfinite(shape)) {
    throw ValidationError("sample_truncated_gamma: shape must be positive");
  }
  if (!(upper > 0.0)) {
    throw ValidationError("sample_truncated_gamma: upper bound must be positive");
  }
  if (std::isnan(rate)) {
    throw ValidationError("sample_truncated_gamma: rate is NaN");
  }
  rate = std::max(rate, kRateFloor);

  if (std::isinf(upper)) {
    return std::exp(sample_log_gamma(shape, rng) - std::log(rate));
  }

  const double scaled_upper = rate * upper;
  const double mass = boost::math::gamma_p(shape, scaled_upper);
  if (mass >= kMinInvertibleMass) {
    for (;;) {
      const double y = boost::math::gamma_p_inv(shape, rng.uniform() * mass);
      double x = y / rate;
      if (x >= upper) x = below(upper);
      if (x > 0.0) return x;
    }
  }

  // Far below the bulk. Rejection from the tangent of the (concave) log
  // density in log x at the bound: propose t = U^(1/e) on (0, 1), accept with
  // exp(ru (1 - t + log t)).
  const double exponent = shape - scaled_upper;
  const double e = exponent > 0.0 ? exponent : shape;
  for (;;) {
    const double t = std::exp(std::log(rng.uniform()) / e);
    const double log_accept =
        exponent > 0.0 ? scaled_upper * (1.0 - t + std::log(t)) : -scaled_upper * t;
    if (std::log(rng.uniform()) <= log_accept) {
      const double x = upper * t;
      if (x > 0.0) return std::min(x, below(upper));
    }
  }
}

double sample_truncated_exponential(double rate, double upper, RngStream& rng) {
  if (!(upper > 0.0)) {
    throw ValidationError("sample_truncated_exponential: upper bound must be positive");
  }
  if (std::isnan(rate)) {
    throw ValidationError("sample_truncated_exponential: rate is NaN");
  }
  rate = std::max(rate, kRateFloor);
  for (;;) {
    double x;
    if (std::isinf(upper)) {
      x = -std::log(rng.uniform()) / rate;
    } else {
      x = -std::log1p(rng.uniform() * std::expm1(-rate * upper)) / rate;
      if (x >= upper) x = below(upper);
    }
    if (x > 0.0 && std::isfinite(x)) return x;
  }
}

}  // namespace dolda
