#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "dolda/corpus.hpp"
#include "dolda/regression.hpp"
#include "dolda/topic_state.hpp"

namespace dolda {

/// How labels are drawn from the linear predictors h_d.
enum class LabelLaw {
  kOrthant,      // Phi(h_l) prod_{s != l} Phi(-h_s), normalized; matches the latent sampler
  kMarginalCdf,  // Phi(h_l) / sum_s Phi(h_s)
};

struct SimulationConfig {
  Hyper hyper;
  PriorFamily prior;
  std::size_t num_docs = 100;
  std::size_t doc_length = 100;
  std::size_t vocabulary_size = 100;
  std::size_t num_classes = 2;
  std::size_t num_covariates = 0;  // x ~ N(0, 1)
  LabelLaw label_law = LabelLaw::kOrthant;
  std::uint64_t seed = 1;

  // Planted parameters replace the corresponding prior draws when set.
  std::optional<RowMatrix> phi;           // K x V
  std::optional<Eigen::MatrixXd> eta;     // (1+K+P) x L
  std::optional<double> theta_alpha;      // document-topic concentration for theta only
};

/// A synthetic corpus with the parameters that generated it.
struct SimulatedData {
  Corpus corpus;
  RowMatrix phi;
  Eigen::MatrixXd theta;  // D x K
  std::vector<std::vector<TopicId>> z;
  Eigen::MatrixXd eta;
  Eigen::VectorXd tau;
  Eigen::MatrixXd lambda;
};

/// A well-separated planted setting. Topic k puts its mass on its own block
/// of about V/K words (Dirichlet(1) weights inside the block), theta uses
/// concentration 0.1, and class l is driven by the topics k with k mod L = l:
/// intercepts are -signal/2 and eta_{k, k mod L} = signal.
SimulationConfig separated_config(std::size_t num_topics, std::size_t num_classes,
                                  std::size_t vocabulary_size, std::size_t num_docs,
                                  std::size_t doc_length, std::uint64_t seed,
                                  double signal = 8.0);

/// Ancestral sampling: Phi, tau, lambda, eta, theta, z, w, x, y.
SimulatedData forward_simulate(const SimulationConfig& config);

/// Tau, lambda and eta drawn from the coefficient prior.
void draw_coefficient_prior(std::size_t num_coefficients, std::size_t num_classes,
                            const PriorFamily& prior, RngStream& rng, Eigen::MatrixXd& eta,
                            Eigen::VectorXd& tau, Eigen::MatrixXd& lambda);

/// w_{d,n} ~ Categorical(phi_{z_{d,n}}) for every token, in place.
void resample_words(Corpus& corpus, const TopicState& topics, RngStream& rng);

/// y_d drawn from the label law given the rows of h (D x L), in place.
void resample_labels(Corpus& corpus, const Eigen::MatrixXd& linear_predictors, LabelLaw law,
                     RngStream& rng);

/// Zero-padded names such as c00, c01, ... in sorted order.
std::vector<std::string> synthetic_names(const char* prefix, std::size_t count);
/// Purely alphabetic word types qaa, qab, ... in sorted order, so that
/// they survive tokenization.
std::vector<std::string> synthetic_words(std::size_t count);

}  // namespace dolda
