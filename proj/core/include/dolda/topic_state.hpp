#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "dolda/corpus.hpp"
#include "dolda/rng.hpp"

namespace dolda {

using CountMatrix = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using TopicId = std::uint32_t;

/// Symmetric LDA priors and the topic count.
struct Hyper {
  double alpha = 0.01;  // document-topic
  double beta = 0.01;   // topic-word
  std::uint32_t num_topics = 10;

  void validate() const;
};

/// Topic indicators with their sufficient statistics and the sampled Phi.
///
/// Theta is collapsed: it enters the indicator conditional only through
/// doc_topic + alpha. Phi is kept explicitly so documents can be swept in
/// parallel against a fixed Phi.
struct TopicState {
  std::vector<std::vector<TopicId>> z;  // z[d][n]
  CountMatrix doc_topic;                // D x K
  CountMatrix topic_word;               // K x V
  Eigen::VectorXi topic_totals;         // K
  RowMatrix phi;                        // K x V, rows on the simplex

  std::size_t num_topics() const { return static_cast<std::size_t>(phi.rows()); }
};

/// Uniform random indicators, consistent counts, and one Phi draw.
TopicState init_random(const Corpus& corpus, const Hyper& hyper, RngStream& rng);

/// Removes token (d, n) from the three count tables. Throws std::logic_error
/// on underflow.
void decrement(TopicState& state, const Corpus& corpus, std::size_t d, std::size_t n);
/// Assigns token (d, n) to topic k and adds it to the count tables.
void increment(TopicState& state, const Corpus& corpus, std::size_t d, std::size_t n,
               TopicId k);

/// Topic proportions of document d; zero vector for an empty document.
Eigen::VectorXd zbar(const TopicState& state, std::size_t d);
/// D x K matrix of all zbar rows.
Eigen::MatrixXd zbar_matrix(const TopicState& state);

/// phi_k ~ Dir(beta + topic_word[k]) for one topic.
void sample_phi_row(TopicState& state, const Hyper& hyper, std::size_t k, RngStream& rng);
/// Redraws every row from a single stream.
void sample_phi(TopicState& state, const Hyper& hyper, RngStream& rng);
/// Redraws every row, row k from stream (seed, kPhi, iteration, k), fanned
/// out over `workers` threads.
void sample_phi(TopicState& state, const Hyper& hyper, std::uint64_t seed,
                std::uint64_t iteration, unsigned workers);

/// Rebuilds all count tables from z and the corpus tokens.
void recompute_counts(TopicState& state, const Corpus& corpus);

/// True when the count tables agree with a from-scratch recount.
bool counts_consistent(const TopicState& state, const Corpus& corpus);

}  // namespace dolda
