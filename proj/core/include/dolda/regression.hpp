#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dolda/corpus.hpp"
#include "dolda/rng.hpp"

namespace dolda {

enum class PriorKind { kHorseshoe, kNormal };

/// Coefficient prior. The intercept always gets N(0, c^2); the remaining
/// coefficients get either the horseshoe or N(0, c^2).
struct PriorFamily {
  PriorKind kind = PriorKind::kHorseshoe;
  double c = 100.0;

  void validate() const;
};

/// DO-probit regression parameters.
///
/// Rows of `eta` are ordered (intercept, K topic proportions, P covariates);
/// column l holds the coefficients of class l. `lambda` has no intercept row.
struct RegressionState {
  Eigen::MatrixXd eta;     // (1+K+P) x L
  Eigen::MatrixXd a;       // D x L latent utilities
  Eigen::VectorXd tau;     // L, global shrinkage
  Eigen::MatrixXd lambda;  // (K+P) x L, local shrinkage

  /// eta = 0, a = 0, tau = lambda = 1.
  static RegressionState initial(std::size_t num_docs, std::size_t num_coefficients,
                                 std::size_t num_classes);
  std::size_t num_coefficients() const { return static_cast<std::size_t>(eta.rows()); }
  std::size_t num_classes() const { return static_cast<std::size_t>(eta.cols()); }
};

/// (1, zbar, x).
Eigen::VectorXd design_row(const Eigen::Ref<const Eigen::VectorXd>& zbar,
                           const Eigen::Ref<const Eigen::VectorXd>& x);
/// Stacks design rows; zbar is D x K, covariates D x P.
Eigen::MatrixXd design_matrix(const Eigen::MatrixXd& zbar, const Eigen::MatrixXd& covariates);

/// a[d][l] ~ N(design_d . eta_l, 1), truncated positive for l = y_d and
/// negative otherwise. Document d draws from stream (seed, kLatent, iteration, d).
void sample_latents(RegressionState& state, const Eigen::MatrixXd& design,
                    std::span<const LabelId> labels, std::uint64_t seed,
                    std::uint64_t iteration, unsigned workers);

/// True when every row of a is positive exactly at its label.
bool latent_signs_consistent(const Eigen::MatrixXd& a, std::span<const LabelId> labels);

/// Diagonal prior precision of eta_l: 1/c^2 for the intercept, then
/// 1/(tau^2 lambda_p^2) (horseshoe) or 1/c^2 (normal).
Eigen::VectorXd prior_precision(double tau, const Eigen::VectorXd& lambda_col,
                                const PriorFamily& prior);

/// eta_l ~ N(Q^-1 X'a_l, Q^-1) with Q = gram + diag(prior_precision).
/// Retries once with 1e-8 added to the diagonal before giving up with a
/// NumericalError.
Eigen::VectorXd sample_eta_class(const Eigen::MatrixXd& gram,
                                 const Eigen::VectorXd& design_t_a,
                                 const Eigen::VectorXd& prior_precision, RngStream& rng);
Eigen::VectorXd sample_eta_class(const Eigen::MatrixXd& design, const Eigen::VectorXd& a_col,
                                 double tau, const Eigen::VectorXd& lambda_col,
                                 const PriorFamily& prior, RngStream& rng);

/// Two-step slice update of the global shrinkage of one class:
///   u ~ U(0, 1/(1 + 1/tau_prev^2)),
///   1/tau^2 ~ Gamma(J/2, sum_p (eta_p/lambda_p)^2 / 2) on (0, (1-u)/u),
/// where the sum skips the intercept and J - 1 coefficients are shrunk.
double sample_tau(const Eigen::VectorXd& eta_col, const Eigen::VectorXd& lambda_col,
                  double tau_prev, RngStream& rng);

/// Two-step slice update of one local shrinkage parameter:
///   u ~ U(0, 1/(1 + 1/lambda_prev^2)),
///   1/lambda^2 ~ Exp((eta/tau)^2 / 2) on (0, (1-u)/u).
double sample_lambda(double eta, double tau, double lambda_prev, RngStream& rng);

/// eta, tau and lambda for every class, in that order within a class.
/// Class l draws from stream (seed, kRegression, iteration, l).
void sample_coefficients(RegressionState& state, const Eigen::MatrixXd& design,
                         const PriorFamily& prior, std::uint64_t seed,
                         std::uint64_t iteration, unsigned workers);

/// Class probabilities from the normalized marginal normal CDFs,
/// p_l = Phi(h_l) / sum_s Phi(h_s), evaluated in log space.
Eigen::VectorXd do_class_probabilities(const Eigen::VectorXd& linear_predictors);

/// Probability that class l is the only positive utility given the others
/// are negative: Phi(h_l) prod_{s != l} Phi(-h_s), normalized. This is the
/// label law implied by the latent-utility sampler.
Eigen::VectorXd orthant_class_probabilities(const Eigen::VectorXd& linear_predictors);

/// Settings for a regression-only Gibbs run on a fixed design.
struct RegressionRunConfig {
  PriorFamily prior;
  std::uint32_t iterations = 2000;
  std::uint32_t burn_in = 1000;
  std::uint32_t thinning = 1;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

struct RegressionDraws {
  std::vector<Eigen::MatrixXd> eta;  // retained draws
  Eigen::MatrixXd eta_mean;
  RegressionState final_state;
};

/// Gibbs sampler over (a, eta, tau, lambda) with the design held fixed.
RegressionDraws fit_regression(const Eigen::MatrixXd& design,
                               std::span<const LabelId> labels, std::size_t num_classes,
                               const RegressionRunConfig& config);

}  // namespace dolda
