#include "dolda/topic_state.hpp"

#include <stdexcept>
#include <string>

#include "dolda/distributions.hpp"
#include "dolda/error.hpp"
#include "dolda/parallel.hpp"

namespace dolda {

void Hyper::validate() const {
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");
  if (num_topics < 1) throw ValidationError("number of topics must be at least 1");
}

TopicState init_random(const Corpus& corpus, const Hyper& hyper, RngStream& rng) {
  hyper.validate();
  const auto D = static_cast<Eigen::Index>(corpus.num_docs());
  const auto K = static_cast<Eigen::Index>(hyper.num_topics);
  const auto V = static_cast<Eigen::Index>(corpus.vocabulary_size());

  TopicState state;
  state.doc_topic = CountMatrix::Zero(D, K);
  state.topic_word = CountMatrix::Zero(K, V);
  state.topic_totals = Eigen::VectorXi::Zero(K);
  state.phi = RowMatrix::Constant(K, V, V > 0 ? 1.0 / static_cast<double>(V) : 0.0);
  state.z.resize(corpus.num_docs());

  std::uniform_int_distribution<TopicId> uniform_topic(0, hyper.num_topics - 1);
  for (std::size_t d = 0; d < corpus.num_docs(); ++d) {
    state.z[d].assign(corpus.doc_length(d), 0);
    for (std::size_t n = 0; n < corpus.doc_length(d); ++n) {
      increment(state, corpus, d, n, uniform_topic(rng));
    }
  }
  if (V > 0) sample_phi(state, hyper, rng);
  return state;
}

void decrement(TopicState& state, const Corpus& corpus, std::size_t d, std::size_t n) {
  const TopicId k = state.z[d][n];
  const WordId w = corpus.docs[d][n];
  auto& dk = state.doc_topic(static_cast<Eigen::Index>(d), k);
  auto& kw = state.topic_word(k, w);
  auto& kt = state.topic_totals[k];
  if (dk <= 0 || kw <= 0 || kt <= 0) {
    throw std::logic_error("topic count underflow at document " + std::to_string(d) +
                           ", token " + std::to_string(n));
  }
  --dk;
  --kw;
  --kt;
}

void increment(TopicState& state, const Corpus& corpus, std::size_t d, std::size_t n,
               TopicId k) {
  if (k >= static_cast<TopicId>(state.doc_topic.cols())) {
    throw std::logic_error("topic id out of range");
  }
  state.z[d][n] = k;
  ++state.doc_topic(static_cast<Eigen::Index>(d), k);
  ++state.topic_word(k, corpus.docs[d][n]);
  ++state.topic_totals[k];
}

Eigen::VectorXd zbar(const TopicState& state, std::size_t d) {
  const auto row = state.doc_topic.row(static_cast<Eigen::Index>(d));
  const auto total = row.sum();
  if (total == 0) return Eigen::VectorXd::Zero(row.size());
  return row.transpose().cast<double>() / static_cast<double>(total);
}

Eigen::MatrixXd zbar_matrix(const TopicState& state) {
  Eigen::MatrixXd out(state.doc_topic.rows(), state.doc_topic.cols());
  for (Eigen::Index d = 0; d < out.rows(); ++d) {
    out.row(d) = zbar(state, static_cast<std::size_t>(d)).transpose();
  }
  return out;
}

void sample_phi_row(TopicState& state, const Hyper& hyper, std::size_t k, RngStream& rng) {
  const auto V = static_cast<std::size_t>(state.topic_word.cols());
  std::vector<double> concentration(V);
  for (std::size_t v = 0; v < V; ++v) {
    concentration[v] = hyper.beta + state.topic_word(static_cast<Eigen::Index>(k),
                                                      static_cast<Eigen::Index>(v));
  }
  sample_dirichlet(concentration, rng,
                   std::span<double>(state.phi.row(static_cast<Eigen::Index>(k)).data(), V));
}

void sample_phi(TopicState& state, const Hyper& hyper, RngStream& rng) {
  for (std::size_t k = 0; k < state.num_topics(); ++k) sample_phi_row(state, hyper, k, rng);
}

void sample_phi(TopicState& state, const Hyper& hyper, std::uint64_t seed,
                std::uint64_t iteration, unsigned workers) {
  parallel_for(state.num_topics(), workers, [&](std::size_t k) {
    RngStream rng(seed, StreamPhase::kPhi, iteration, k);
    sample_phi_row(state, hyper, k, rng);
  });
}

void recompute_counts(TopicState& state, const Corpus& corpus) {
  state.doc_topic.setZero();
  state.topic_word.setZero();
  state.topic_totals.setZero();
  for (std::size_t d = 0; d < corpus.num_docs(); ++d) {
    for (std::size_t n = 0; n < corpus.doc_length(d); ++n) {
      const auto k = state.z[d][n];
      ++state.doc_topic(static_cast<Eigen::Index>(d), k);
      ++state.topic_word(k, corpus.docs[d][n]);
      ++state.topic_totals[k];
    }
  }
}

bool counts_consistent(const TopicState& state, const Corpus& corpus) {
  TopicState fresh = state;
  recompute_counts(fresh, corpus);
  return fresh.doc_topic == state.doc_topic && fresh.topic_word == state.topic_word &&
         fresh.topic_totals == state.topic_totals;
}

}  // namespace dolda
