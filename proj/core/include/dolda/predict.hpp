#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dolda/corpus.hpp"
#include "dolda/regression.hpp"
#include "dolda/topic_state.hpp"

namespace dolda {

/// Everything needed to score new documents.
struct FittedModel {
  RowMatrix phi_bar;                     // K x V
  std::vector<Eigen::MatrixXd> eta_draws;  // retained (thinned) draws
  Eigen::MatrixXd eta_mean;
  Vocabulary vocabulary;
  std::vector<std::string> label_names;
  CovariateSchema covariate_schema;
  Hyper hyper;
  PriorFamily prior;
  bool supervised = true;

  std::size_t num_topics() const { return static_cast<std::size_t>(phi_bar.rows()); }
  std::size_t num_classes() const { return label_names.size(); }
  void validate() const;
};

/// Running elementwise mean of Phi draws.
class PhiAccumulator {
 public:
  void add(const RowMatrix& phi);
  std::size_t count() const { return count_; }
  /// Mean with rows renormalized; throws ValidationError when empty.
  RowMatrix mean() const;

 private:
  RowMatrix sum_;
  std::size_t count_ = 0;
};

/// Elementwise mean of the draws, rows renormalized.
RowMatrix estimate_phi_bar(std::span<const RowMatrix> draws);

struct NewDocConfig {
  std::uint32_t iterations = 200;
  std::uint32_t burn_in = 100;
};

/// Collapsed sweeps over one document against a fixed phi_bar:
///   p(z_i = k) ∝ phi_bar_{k,v} (M_k^{-i} + alpha),
/// returning the mean topic proportions over the retained passes.
Eigen::VectorXd sample_new_doc_topics(std::span<const WordId> tokens, const RowMatrix& phi_bar,
                                      double alpha, const NewDocConfig& config,
                                      RngStream& rng);

/// argmax_l (1, zbar, x) . eta_l, lowest id on ties.
LabelId predict_label(const Eigen::VectorXd& zbar, const Eigen::VectorXd& x,
                      const Eigen::MatrixXd& eta_mean);

/// Mean of do_class_probabilities over the draws.
Eigen::VectorXd predictive_distribution(const Eigen::VectorXd& zbar, const Eigen::VectorXd& x,
                                        std::span<const Eigen::MatrixXd> eta_draws);

struct Prediction {
  LabelId label = 0;
  Eigen::VectorXd probabilities;
  Eigen::VectorXd zbar;
};

/// Scores every document; document d draws from stream (seed, kPredict, 0, d).
/// covariates is D x P, already encoded with the model's schema.
std::vector<Prediction> predict(const FittedModel& model,
                                const std::vector<std::vector<WordId>>& docs,
                                const Eigen::MatrixXd& covariates, std::uint64_t seed,
                                unsigned workers, const NewDocConfig& config = {});

/// Fraction of predictions equal to the labels.
double accuracy(std::span<const Prediction> predictions, std::span<const LabelId> labels);

}  // namespace dolda
