#include "dolda/simulate.hpp"

#include <cmath>
#include <numbers>

#include "dolda/distributions.hpp"
#include "dolda/error.hpp"

namespace dolda {
namespace {

double half_cauchy(RngStream& rng) {
  return std::tan(0.5 * std::numbers::pi * rng.uniform());
}

LabelId draw_label(const Eigen::VectorXd& h, LabelLaw law, RngStream& rng) {
  const Eigen::VectorXd p =
      law == LabelLaw::kOrthant ? orthant_class_probabilities(h) : do_class_probabilities(h);
  return static_cast<LabelId>(
      sample_categorical_unnormalized(std::span<const double>(p.data(), p.size()), rng));
}

}  // namespace

std::vector<std::string> synthetic_names(const char* prefix, std::size_t count) {
  std::size_t width = 1;
  for (std::size_t n = count; n >= 10; n /= 10) ++width;
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::string digits = std::to_string(i);
    out.push_back(prefix + std::string(width - digits.size(), '0') + digits);
  }
  return out;
}

std::vector<std::string> synthetic_words(std::size_t count) {
  std::size_t width = 1;
  for (std::size_t n = count; n > 26; n = (n + 25) / 26) ++width;
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::string w(width + 1, 'a');
    w[0] = 'q';
    for (std::size_t j = 0, r = i; j < width; ++j, r /= 26) w[width - j] = static_cast<char>('a' + r % 26);
    out.push_back(std::move(w));
  }
  return out;
}

void draw_coefficient_prior(std::size_t J, std::size_t L, const PriorFamily& prior,
                            RngStream& rng, Eigen::MatrixXd& eta, Eigen::VectorXd& tau,
                            Eigen::MatrixXd& lambda) {
  const auto Ji = static_cast<Eigen::Index>(J);
  const auto Li = static_cast<Eigen::Index>(L);
  eta.resize(Ji, Li);
  tau.setOnes(Li);
  lambda.setOnes(Ji - 1, Li);
  for (Eigen::Index l = 0; l < Li; ++l) {
    eta(0, l) = prior.c * rng.normal();
    if (prior.kind == PriorKind::kHorseshoe) {
      tau[l] = half_cauchy(rng);
      for (Eigen::Index p = 0; p + 1 < Ji; ++p) {
        lambda(p, l) = half_cauchy(rng);
        eta(p + 1, l) = tau[l] * lambda(p, l) * rng.normal();
      }
    } else {
      for (Eigen::Index p = 1; p < Ji; ++p) eta(p, l) = prior.c * rng.normal();
    }
  }
}

SimulatedData forward_simulate(const SimulationConfig& config) {
  config.hyper.validate();
  config.prior.validate();
  const std::size_t K = config.hyper.num_topics;
  const std::size_t V = config.vocabulary_size;
  const std::size_t D = config.num_docs;
  const std::size_t L = config.num_classes;
  const std::size_t P = config.num_covariates;
  const std::size_t J = 1 + K + P;
  if (V == 0 || L == 0) throw ValidationError("simulation needs V >= 1 and L >= 1");

  SimulatedData out;
  RngStream rng(config.seed, StreamPhase::kSimulate, 0, 0);

  // Topics.
  if (config.phi) {
    if (static_cast<std::size_t>(config.phi->rows()) != K ||
        static_cast<std::size_t>(config.phi->cols()) != V) {
      throw ValidationError("planted phi has the wrong shape");
    }
    out.phi = *config.phi;
  } else {
    out.phi.resize(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(V));
    const std::vector<double> conc(V, config.hyper.beta);
    for (std::size_t k = 0; k < K; ++k) {
      sample_dirichlet(conc, rng,
                       std::span<double>(out.phi.row(static_cast<Eigen::Index>(k)).data(), V));
    }
  }

  // Coefficients.
  draw_coefficient_prior(J, L, config.prior, rng, out.eta, out.tau, out.lambda);
  if (config.eta) {
    if (static_cast<std::size_t>(config.eta->rows()) != J ||
        static_cast<std::size_t>(config.eta->cols()) != L) {
      throw ValidationError("planted eta has the wrong shape");
    }
    out.eta = *config.eta;
  }

  // Documents.
  Corpus& corpus = out.corpus;
  corpus.vocabulary = Vocabulary(synthetic_words(V));
  corpus.label_names = synthetic_names("c", L);
  corpus.doc_ids = synthetic_names("d", D);
  corpus.covariates.resize(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(P));
  for (std::size_t p = 0; p < P; ++p) {
    corpus.covariate_schema.columns.push_back(
        {"x" + std::to_string(p), CovariateColumn::Kind::kNumeric, {}});
  }
  out.theta.resize(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(K));
  out.z.resize(D);
  corpus.docs.resize(D);
  corpus.labels.resize(D);
  const std::vector<double> theta_conc(K, config.theta_alpha.value_or(config.hyper.alpha));
  std::vector<double> theta(K);
  for (std::size_t d = 0; d < D; ++d) {
    const auto di = static_cast<Eigen::Index>(d);
    sample_dirichlet(theta_conc, rng, theta);
    for (std::size_t k = 0; k < K; ++k) out.theta(di, static_cast<Eigen::Index>(k)) = theta[k];
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K));
    auto& zd = out.z[d];
    auto& wd = corpus.docs[d];
    zd.resize(config.doc_length);
    wd.resize(config.doc_length);
    for (std::size_t n = 0; n < config.doc_length; ++n) {
      const auto k = sample_categorical_unnormalized(theta, rng);
      const auto row = out.phi.row(static_cast<Eigen::Index>(k));
      zd[n] = static_cast<TopicId>(k);
      wd[n] = static_cast<WordId>(
          sample_categorical_unnormalized(std::span<const double>(row.data(), V), rng));
      counts[static_cast<Eigen::Index>(k)] += 1.0;
    }
    for (std::size_t p = 0; p < P; ++p) {
      corpus.covariates(di, static_cast<Eigen::Index>(p)) = rng.normal();
    }
    if (config.doc_length > 0) counts /= static_cast<double>(config.doc_length);
    const Eigen::VectorXd x = corpus.covariates.row(di).transpose();
    const Eigen::VectorXd h = (design_row(counts, x).transpose() * out.eta).transpose();
    corpus.labels[d] = draw_label(h, config.label_law, rng);
  }
  corpus.validate();
  return out;
}

SimulationConfig separated_config(std::size_t K, std::size_t L, std::size_t V, std::size_t D,
                                  std::size_t N, std::uint64_t seed, double signal) {
  if (K == 0 || V < K) throw ValidationError("separated setting needs 1 <= K <= V");
  SimulationConfig c;
  c.hyper.num_topics = static_cast<std::uint32_t>(K);
  c.num_docs = D;
  c.doc_length = N;
  c.vocabulary_size = V;
  c.num_classes = L;
  c.seed = seed;
  c.theta_alpha = 0.1;

  RngStream rng(seed, StreamPhase::kSimulate, 1, 0);
  RowMatrix phi = RowMatrix::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(V));
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t begin = V * k / K;
    const std::size_t end = V * (k + 1) / K;
    const std::vector<double> ones(end - begin, 1.0);
    const auto w = sample_dirichlet(ones, rng);
    for (std::size_t v = begin; v < end; ++v) {
      phi(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(v)) = w[v - begin];
    }
  }
  c.phi = std::move(phi);

  Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(1 + K),
                                              static_cast<Eigen::Index>(L));
  eta.row(0).setConstant(-0.5 * signal);
  for (std::size_t k = 0; k < K; ++k) {
    eta(static_cast<Eigen::Index>(1 + k), static_cast<Eigen::Index>(k % L)) = signal;
  }
  c.eta = std::move(eta);
  return c;
}

void resample_words(Corpus& corpus, const TopicState& topics, RngStream& rng) {
  const auto V = static_cast<std::size_t>(topics.phi.cols());
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    for (std::size_t n = 0; n < corpus.docs[d].size(); ++n) {
      const auto row = topics.phi.row(topics.z[d][n]);
      corpus.docs[d][n] = static_cast<WordId>(
          sample_categorical_unnormalized(std::span<const double>(row.data(), V), rng));
    }
  }
}

void resample_labels(Corpus& corpus, const Eigen::MatrixXd& h, LabelLaw law, RngStream& rng) {
  for (Eigen::Index d = 0; d < h.rows(); ++d) {
    corpus.labels[static_cast<std::size_t>(d)] = draw_label(h.row(d).transpose(), law, rng);
  }
}

}  // namespace dolda
