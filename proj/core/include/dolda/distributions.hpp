#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dolda/rng.hpp"

namespace dolda {

/// Rates at or below this value are clamped before truncated Gamma and
/// Exponential draws. Keeps the shrinkage slice steps proper when all
/// coefficients of a class sit at zero.
inline constexpr double kRateFloor = 1e-10;

enum class Side { kPositive, kNegative };

// Standard normal helpers.
double normal_cdf(double x);
double normal_log_cdf(double x);
double normal_quantile(double p);
double log_sum_exp(std::span<const double> values);

/// N(mean, 1) truncated to (0, inf) or (-inf, 0).
///
/// Inverse-CDF on the side containing the mode, exponential rejection
/// (Robert 1995) in the tail, so means of +-30 and beyond stay exact.
double sample_truncated_normal(double mean, Side side, RngStream& rng);

/// Gamma(shape, 1) draw returned on the log scale; safe for tiny shapes.
double sample_log_gamma(double shape, RngStream& rng);

/// Writes a Dirichlet(concentration) draw into `out`.
void sample_dirichlet(std::span<const double> concentration, RngStream& rng,
                      std::span<double> out);
std::vector<double> sample_dirichlet(std::span<const double> concentration,
                                     RngStream& rng);

/// Index k with probability weights[k] / sum(weights).
std::size_t sample_categorical_unnormalized(std::span<const double> weights,
                                            RngStream& rng);

/// Draw from N(precision^-1 * linear_term, precision^-1) using a single
/// Cholesky factorization. Throws NumericalError if precision is not SPD.
Eigen::VectorXd sample_mvn_by_precision(const Eigen::MatrixXd& precision,
                                        const Eigen::VectorXd& linear_term,
                                        RngStream& rng);

/// x ~ Gamma(shape, rate) conditioned on x < upper (upper may be +inf).
double sample_truncated_gamma(double shape, double rate, double upper,
                              RngStream& rng);

/// x ~ Exponential(rate) conditioned on x < upper (upper may be +inf).
double sample_truncated_exponential(double rate, double upper, RngStream& rng);

}  // namespace dolda
