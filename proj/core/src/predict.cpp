#include "dolda/predict.hpp"

#include "dolda/distributions.hpp"
#include "dolda/error.hpp"
#include "dolda/parallel.hpp"

namespace dolda {
namespace {

void renormalize_rows(RowMatrix& m) {
  for (Eigen::Index k = 0; k < m.rows(); ++k) {
    const double s = m.row(k).sum();
    if (s > 0.0) m.row(k) /= s;
  }
}

}  // namespace

void FittedModel::validate() const {
  hyper.validate();
  prior.validate();
  if (phi_bar.rows() != static_cast<Eigen::Index>(hyper.num_topics)) {
    throw ValidationError("model: phi_bar rows differ from num_topics");
  }
  if (static_cast<std::size_t>(phi_bar.cols()) != vocabulary.size()) {
    throw ValidationError("model: phi_bar columns differ from vocabulary size");
  }
  if (label_names.empty()) throw ValidationError("model: no classes");
  if (eta_draws.empty()) throw ValidationError("model: no eta draws");
  const auto J = static_cast<Eigen::Index>(1 + hyper.num_topics + covariate_schema.width());
  const auto L = static_cast<Eigen::Index>(label_names.size());
  if (eta_mean.rows() != J || eta_mean.cols() != L) {
    throw ValidationError("model: eta_mean has the wrong shape");
  }
  for (const auto& e : eta_draws) {
    if (e.rows() != J || e.cols() != L) throw ValidationError("model: eta draw has the wrong shape");
  }
}

void PhiAccumulator::add(const RowMatrix& phi) {
  if (count_ == 0) {
    sum_ = phi;
  } else {
    if (phi.rows() != sum_.rows() || phi.cols() != sum_.cols()) {
      throw ValidationError("phi draws differ in shape");
    }
    sum_ += phi;
  }
  ++count_;
}

RowMatrix PhiAccumulator::mean() const {
  if (count_ == 0) throw ValidationError("phi_bar needs at least one draw");
  RowMatrix out = sum_ / static_cast<double>(count_);
  renormalize_rows(out);
  return out;
}

RowMatrix estimate_phi_bar(std::span<const RowMatrix> draws) {
  PhiAccumulator acc;
  for (const auto& d : draws) acc.add(d);
  return acc.mean();
}

Eigen::VectorXd sample_new_doc_topics(std::span<const WordId> tokens, const RowMatrix& phi_bar,
                                      double alpha, const NewDocConfig& config,
                                      RngStream& rng) {
  const auto K = static_cast<std::size_t>(phi_bar.rows());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K));
  if (tokens.empty()) return mean;
  if (config.burn_in >= config.iterations) {
    throw ValidationError("new-document sweep: burn_in must be below iterations");
  }
  const std::size_t N = tokens.size();
  std::vector<TopicId> z(N);
  std::vector<int> counts(K, 0);
  std::vector<double> weights(K);
  for (std::size_t n = 0; n < N; ++n) {
    z[n] = static_cast<TopicId>(rng() % K);
    ++counts[z[n]];
  }
  std::size_t kept = 0;
  for (std::uint32_t it = 0; it < config.iterations; ++it) {
    for (std::size_t n = 0; n < N; ++n) {
      --counts[z[n]];
      const auto v = static_cast<Eigen::Index>(tokens[n]);
      for (std::size_t k = 0; k < K; ++k) {
        weights[k] = phi_bar(static_cast<Eigen::Index>(k), v) * (counts[k] + alpha);
      }
      z[n] = static_cast<TopicId>(sample_categorical_unnormalized(weights, rng));
      ++counts[z[n]];
    }
    if (it >= config.burn_in) {
      for (std::size_t k = 0; k < K; ++k) mean[static_cast<Eigen::Index>(k)] += counts[k];
      ++kept;
    }
  }
  return mean / (static_cast<double>(kept) * static_cast<double>(N));
}

LabelId predict_label(const Eigen::VectorXd& zbar, const Eigen::VectorXd& x,
                      const Eigen::MatrixXd& eta_mean) {
  const Eigen::VectorXd h = (design_row(zbar, x).transpose() * eta_mean).transpose();
  Eigen::Index best = 0;
  for (Eigen::Index l = 1; l < h.size(); ++l) {
    if (h[l] > h[best]) best = l;
  }
  return static_cast<LabelId>(best);
}

Eigen::VectorXd predictive_distribution(const Eigen::VectorXd& zbar, const Eigen::VectorXd& x,
                                        std::span<const Eigen::MatrixXd> eta_draws) {
  if (eta_draws.empty()) throw ValidationError("predictive distribution needs an eta draw");
  const Eigen::RowVectorXd row = design_row(zbar, x).transpose();
  Eigen::VectorXd p = Eigen::VectorXd::Zero(eta_draws.front().cols());
  for (const auto& eta : eta_draws) p += do_class_probabilities((row * eta).transpose());
  return p / static_cast<double>(eta_draws.size());
}

std::vector<Prediction> predict(const FittedModel& model,
                                const std::vector<std::vector<WordId>>& docs,
                                const Eigen::MatrixXd& covariates, std::uint64_t seed,
                                unsigned workers, const NewDocConfig& config) {
  if (static_cast<std::size_t>(covariates.rows()) != docs.size()) {
    throw ValidationError("predict: covariate rows/docs mismatch");
  }
  if (static_cast<std::size_t>(covariates.cols()) != model.covariate_schema.width()) {
    throw ValidationError("predict: covariate width differs from the model schema");
  }
  std::vector<Prediction> out(docs.size());
  parallel_for(docs.size(), workers, [&](std::size_t d) {
    RngStream rng(seed, StreamPhase::kPredict, 0, d);
    auto& p = out[d];
    p.zbar = sample_new_doc_topics(docs[d], model.phi_bar, model.hyper.alpha, config, rng);
    const Eigen::VectorXd x = covariates.row(static_cast<Eigen::Index>(d)).transpose();
    p.label = predict_label(p.zbar, x, model.eta_mean);
    p.probabilities = predictive_distribution(p.zbar, x, model.eta_draws);
  });
  return out;
}

double accuracy(std::span<const Prediction> predictions, std::span<const LabelId> labels) {
  if (predictions.size() != labels.size()) {
    throw ValidationError("accuracy: predictions/labels length mismatch");
  }
  if (labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i].label == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace dolda
