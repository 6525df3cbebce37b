#include "dolda/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dolda/distributions.hpp"
#include "dolda/error.hpp"
#include "dolda/parallel.hpp"

namespace dolda {
namespace {

constexpr double kMaxPrecision = 1e300;
constexpr double kJitter = 1e-8;

// Inverse squared scale -> scale, kept strictly positive and finite.
double inverse_sqrt_positive(double gamma) {
  gamma = std::clamp(gamma, std::numeric_limits<double>::min(),
                     std::numeric_limits<double>::max());
  return 1.0 / std::sqrt(gamma);
}

double slice_upper(double previous_scale, RngStream& rng) {
  const double prev_inv_sq = 1.0 / (previous_scale * previous_scale);
  const double u = rng.uniform() / (1.0 + prev_inv_sq);
  return (1.0 - u) / u;
}

}  // namespace

void PriorFamily::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw ValidationError("prior scale c must be positive");
}

RegressionState RegressionState::initial(std::size_t num_docs, std::size_t num_coefficients,
                                         std::size_t num_classes) {
  if (num_coefficients < 1) throw ValidationError("regression needs an intercept");
  const auto D = static_cast<Eigen::Index>(num_docs);
  const auto J = static_cast<Eigen::Index>(num_coefficients);
  const auto L = static_cast<Eigen::Index>(num_classes);
  RegressionState s;
  s.eta = Eigen::MatrixXd::Zero(J, L);
  s.a = Eigen::MatrixXd::Zero(D, L);
  s.tau = Eigen::VectorXd::Ones(L);
  s.lambda = Eigen::MatrixXd::Ones(J - 1, L);
  return s;
}

Eigen::VectorXd design_row(const Eigen::Ref<const Eigen::VectorXd>& zbar,
                           const Eigen::Ref<const Eigen::VectorXd>& x) {
  Eigen::VectorXd row(1 + zbar.size() + x.size());
  row[0] = 1.0;
  row.segment(1, zbar.size()) = zbar;
  row.tail(x.size()) = x;
  return row;
}

Eigen::MatrixXd design_matrix(const Eigen::MatrixXd& zbar, const Eigen::MatrixXd& covariates) {
  if (zbar.rows() != covariates.rows()) {
    throw ValidationError("design_matrix: zbar and covariate row counts differ");
  }
  Eigen::MatrixXd X(zbar.rows(), 1 + zbar.cols() + covariates.cols());
  X.col(0).setOnes();
  X.middleCols(1, zbar.cols()) = zbar;
  X.rightCols(covariates.cols()) = covariates;
  return X;
}

void sample_latents(RegressionState& state, const Eigen::MatrixXd& design,
                    std::span<const LabelId> labels, std::uint64_t seed,
                    std::uint64_t iteration, unsigned workers) {
  const auto D = design.rows();
  const auto L = state.eta.cols();
  if (static_cast<std::size_t>(D) != labels.size() || state.a.rows() != D) {
    throw ValidationError("sample_latents: document count mismatch");
  }
  parallel_for(static_cast<std::size_t>(D), workers, [&](std::size_t d) {
    RngStream rng(seed, StreamPhase::kLatent, iteration, d);
    const auto di = static_cast<Eigen::Index>(d);
    const Eigen::RowVectorXd h = design.row(di) * state.eta;
    for (Eigen::Index l = 0; l < L; ++l) {
      state.a(di, l) = sample_truncated_normal(
          h[l], l == labels[d] ? Side::kPositive : Side::kNegative, rng);
    }
  });
}

bool latent_signs_consistent(const Eigen::MatrixXd& a, std::span<const LabelId> labels) {
  for (Eigen::Index d = 0; d < a.rows(); ++d) {
    for (Eigen::Index l = 0; l < a.cols(); ++l) {
      const bool positive = a(d, l) > 0.0;
      if (positive != (l == labels[static_cast<std::size_t>(d)])) return false;
    }
  }
  return true;
}

Eigen::VectorXd prior_precision(double tau, const Eigen::VectorXd& lambda_col,
                                const PriorFamily& prior) {
  Eigen::VectorXd out(lambda_col.size() + 1);
  const double flat = 1.0 / (prior.c * prior.c);
  out[0] = flat;
  for (Eigen::Index p = 0; p < lambda_col.size(); ++p) {
    if (prior.kind == PriorKind::kNormal) {
      out[p + 1] = flat;
    } else {
      const double scale = tau * lambda_col[p];
      out[p + 1] = std::min(1.0 / (scale * scale), kMaxPrecision);
    }
  }
  return out;
}

Eigen::VectorXd sample_eta_class(const Eigen::MatrixXd& gram,
                                 const Eigen::VectorXd& design_t_a,
                                 const Eigen::VectorXd& prior_precision, RngStream& rng) {
  Eigen::MatrixXd precision = gram;
  precision.diagonal() += prior_precision;
  try {
    return sample_mvn_by_precision(precision, design_t_a, rng);
  } catch (const NumericalError&) {
    precision.diagonal().array() += kJitter;
    try {
      return sample_mvn_by_precision(precision, design_t_a, rng);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string("coefficient draw failed after jitter: ") + e.what());
    }
  }
}

Eigen::VectorXd sample_eta_class(const Eigen::MatrixXd& design, const Eigen::VectorXd& a_col,
                                 double tau, const Eigen::VectorXd& lambda_col,
                                 const PriorFamily& prior, RngStream& rng) {
  const Eigen::MatrixXd gram = design.transpose() * design;
  const Eigen::VectorXd xta = design.transpose() * a_col;
  return sample_eta_class(gram, xta, prior_precision(tau, lambda_col, prior), rng);
}

double sample_tau(const Eigen::VectorXd& eta_col, const Eigen::VectorXd& lambda_col,
                  double tau_prev, RngStream& rng) {
  const auto shrunk = lambda_col.size();
  if (eta_col.size() != shrunk + 1) throw ValidationError("sample_tau: size mismatch");
  double rate = 0.0;
  for (Eigen::Index p = 0; p < shrunk; ++p) {
    const double r = eta_col[p + 1] / lambda_col[p];
    rate += r * r;
  }
  rate *= 0.5;
  const double upper = slice_upper(tau_prev, rng);
  const double shape = 0.5 * static_cast<double>(shrunk + 1);
  return inverse_sqrt_positive(sample_truncated_gamma(shape, rate, upper, rng));
}

double sample_lambda(double eta, double tau, double lambda_prev, RngStream& rng) {
  const double r = eta / tau;
  const double upper = slice_upper(lambda_prev, rng);
  return inverse_sqrt_positive(sample_truncated_exponential(0.5 * r * r, upper, rng));
}

void sample_coefficients(RegressionState& state, const Eigen::MatrixXd& design,
                         const PriorFamily& prior, std::uint64_t seed,
                         std::uint64_t iteration, unsigned workers) {
  const Eigen::MatrixXd gram = design.transpose() * design;
  const Eigen::MatrixXd xta = design.transpose() * state.a;
  const auto shrunk = state.lambda.rows();
  parallel_for(state.num_classes(), workers, [&](std::size_t cls) {
    const auto l = static_cast<Eigen::Index>(cls);
    RngStream rng(seed, StreamPhase::kRegression, iteration, cls);
    const Eigen::VectorXd lambda_col = state.lambda.col(l);
    state.eta.col(l) = sample_eta_class(
        gram, xta.col(l), prior_precision(state.tau[l], lambda_col, prior), rng);
    if (prior.kind != PriorKind::kHorseshoe || shrunk == 0) return;
    const Eigen::VectorXd eta_col = state.eta.col(l);
    state.tau[l] = sample_tau(eta_col, lambda_col, state.tau[l], rng);
    for (Eigen::Index p = 0; p < shrunk; ++p) {
      state.lambda(p, l) = sample_lambda(eta_col[p + 1], state.tau[l], state.lambda(p, l), rng);
    }
  });
}

Eigen::VectorXd do_class_probabilities(const Eigen::VectorXd& linear_predictors) {
  std::vector<double> logp(static_cast<std::size_t>(linear_predictors.size()));
  for (Eigen::Index l = 0; l < linear_predictors.size(); ++l) {
    if (!std::isfinite(linear_predictors[l])) {
      throw ValidationError("do_class_probabilities: non-finite linear predictor");
    }
    logp[static_cast<std::size_t>(l)] = normal_log_cdf(linear_predictors[l]);
  }
  const double norm = log_sum_exp(logp);
  Eigen::VectorXd p(linear_predictors.size());
  for (Eigen::Index l = 0; l < p.size(); ++l) {
    p[l] = std::exp(logp[static_cast<std::size_t>(l)] - norm);
  }
  return p;
}

Eigen::VectorXd orthant_class_probabilities(const Eigen::VectorXd& linear_predictors) {
  const auto L = linear_predictors.size();
  double all_negative = 0.0;
  for (Eigen::Index s = 0; s < L; ++s) all_negative += normal_log_cdf(-linear_predictors[s]);
  std::vector<double> logp(static_cast<std::size_t>(L));
  for (Eigen::Index l = 0; l < L; ++l) {
    logp[static_cast<std::size_t>(l)] = all_negative - normal_log_cdf(-linear_predictors[l]) +
                                        normal_log_cdf(linear_predictors[l]);
  }
  const double norm = log_sum_exp(logp);
  Eigen::VectorXd p(L);
  for (Eigen::Index l = 0; l < L; ++l) p[l] = std::exp(logp[static_cast<std::size_t>(l)] - norm);
  return p;
}

RegressionDraws fit_regression(const Eigen::MatrixXd& design,
                               std::span<const LabelId> labels, std::size_t num_classes,
                               const RegressionRunConfig& config) {
  config.prior.validate();
  if (config.burn_in >= config.iterations) {
    throw ValidationError("fit_regression: burn_in must be below iterations");
  }
  RegressionDraws out;
  auto& state = out.final_state;
  state = RegressionState::initial(static_cast<std::size_t>(design.rows()),
                                   static_cast<std::size_t>(design.cols()), num_classes);
  out.eta_mean = Eigen::MatrixXd::Zero(state.eta.rows(), state.eta.cols());
  const auto thinning = std::max<std::uint32_t>(1, config.thinning);
  for (std::uint32_t it = 0; it < config.iterations; ++it) {
    sample_latents(state, design, labels, config.seed, it, config.workers);
    sample_coefficients(state, design, config.prior, config.seed, it, config.workers);
    if (it >= config.burn_in && (it - config.burn_in) % thinning == 0) {
      out.eta.push_back(state.eta);
      out.eta_mean += state.eta;
    }
  }
  out.eta_mean /= static_cast<double>(out.eta.size());
  return out;
}

}  // namespace dolda
