#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "dolda/corpus.hpp"
#include "dolda/regression.hpp"
#include "dolda/topic_state.hpp"

namespace dolda {

/// How the supervised log-weight g_{d,k} is obtained per token.
enum class ZKernel {
  kCached,  // K x K eta cross-product cache, O(K) per token
  kNaive,   // recompute the linear predictor per token, O(K L + L (K+P))
};

struct RunConfig {
  Hyper hyper;
  PriorFamily prior;
  std::uint32_t iterations = 1000;
  std::uint32_t burn_in = 500;
  std::uint32_t phi_mean_window = 100;  // trailing iterations averaged into phi_bar
  std::uint32_t thinning = 10;          // keep every n-th post-burn-in eta draw
  std::uint64_t seed = 1;
  unsigned workers = 1;
  bool supervised = true;  // false: plain LDA, regression steps skipped
  ZKernel z_kernel = ZKernel::kCached;

  void validate() const;
};

/// Full sampler state between iterations.
struct ModelState {
  TopicState topics;
  RegressionState regression;
  Eigen::MatrixXd eta_cross;   // K x K, sum_l eta_{l,k} eta_{l,k'}
  std::uint64_t iteration = 0;  // completed sweeps
};

/// Random indicators, eta = 0, tau = lambda = 1.
ModelState init_model_state(const Corpus& corpus, const RunConfig& config);

/// S[k][k'] = sum_l eta_{1+k,l} eta_{1+k',l} over the topic rows of eta.
Eigen::MatrixXd eta_cross_product(const Eigen::MatrixXd& eta, std::size_t num_topics);

/// Supervised log-weight of topic k for a token of document d, from scratch:
///   -1/2 sum_l [ -2 (eta_{l,k}/N)(a_l - (1, zbar_noti, x) . eta_l)
///                + (eta_{l,k}/N)^2 ].
/// zbar_noti holds the document's counts without the token, divided by N.
double compute_g_full(std::size_t k, const Eigen::VectorXd& zbar_noti,
                      const Eigen::VectorXd& x, const Eigen::VectorXd& a_row,
                      const Eigen::MatrixXd& eta, std::size_t doc_length);

/// Moves the cached g of a document across one token reassignment: the
/// token excluded so far (assigned `entering`) returns to the document and
/// a token currently in topic `leaving` is taken out,
///   g_k += (S[k][leaving] - S[k][entering]) / N^2.
void update_g_incremental(std::span<double> g, const Eigen::MatrixXd& eta_cross,
                          TopicId leaving, TopicId entering, std::size_t doc_length);

/// Instrumentation: called for every resampled token with the supervised
/// log-weights g (token excluded) and the normalized conditional.
using TokenObserver = std::function<void(std::size_t d, std::size_t n,
                                         std::span<const double> g,
                                         std::span<const double> probabilities)>;

/// A reassignment of one token, applied to topic_word after the sweep.
struct TokenMove {
  WordId word;
  TopicId from;
  TopicId to;
};

/// Read-only inputs shared by every document of one indicator sweep.
struct ZSweepContext {
  ZSweepContext(const Corpus& corpus, const ModelState& state, const RunConfig& config);

  const Corpus& corpus;
  RowMatrix phi_by_word;  // V x K copy of phi
  Eigen::MatrixXd eta;
  RowMatrix topic_eta;    // K x L topic rows of eta
  Eigen::MatrixXd eta_cross;
  const Eigen::MatrixXd& a;
  double alpha;
  bool supervised;
  ZKernel kernel;
  const TokenObserver* observer = nullptr;

  // Cached kernel: exp(S[k][j] / N^2) and its reciprocal, K x K column-major,
  // built once per sweep for document lengths shared by enough documents.
  // Other lengths fill columns lazily per document.
  std::unordered_map<std::size_t, std::size_t> length_table;
  std::vector<std::vector<double>> grow_tables;
  std::vector<std::vector<double>> shrink_tables;
};

/// Resamples every token of document d in order:
///   p(z = k) ∝ phi_{k,v} (n_{d,k}^{-i} + alpha) exp(g_{d,k}^{-i}).
/// Updates z[d] and doc_topic row d only; topic_word changes are appended
/// to `moves`.
void sample_z_document(std::size_t d, TopicState& topics, const ZSweepContext& context,
                       RngStream& rng, std::vector<TokenMove>& moves);

/// Resamples all indicators, documents split over workers; document d uses
/// stream (seed, kTopicIndicator, iteration, d). Returns tokens moved.
std::size_t sample_topic_indicators(ModelState& state, const Corpus& corpus,
                                    const RunConfig& config,
                                    const TokenObserver* observer = nullptr);

/// One sweep: latents a, eta / tau / lambda per class, eta cross-product,
/// topic indicators, Phi. Identical results for any worker count.
void gibbs_iteration(ModelState& state, const Corpus& corpus, const RunConfig& config,
                     const TokenObserver* observer = nullptr);

struct LogLikelihood {
  double do_probit = 0.0;  // orthant normalizer term
  double lda = 0.0;        // log p(w | z, beta)
  double total() const { return do_probit + lda; }
};

/// Linear predictors (1, zbar_d, x_d) . eta_l as a D x L matrix.
Eigen::MatrixXd linear_predictors(const ModelState& state, const Corpus& corpus);

/// Trace log-likelihood:
///   sum_d log sum_s [ (1 - Phi(-h_ds)) prod_{l != s} Phi(-h_dl) ]
///   + sum_k [ lgamma(V beta) - lgamma(V beta + n_k) + sum_v (lgamma(beta + n_kv) - lgamma(beta)) ].
LogLikelihood log_likelihood(const ModelState& state, const Corpus& corpus, const Hyper& hyper);

/// Observed-label variant: sum_d [log term_{y_d} - log sum_s term_s].
double do_label_log_likelihood(const ModelState& state, const Corpus& corpus);

}  // namespace dolda
