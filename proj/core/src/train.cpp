#include "dolda/train.hpp"

#include <chrono>

#include "dolda/error.hpp"

namespace dolda {
namespace {

FittedModel model_shell(const Corpus& corpus, const RunConfig& config) {
  FittedModel m;
  m.vocabulary = corpus.vocabulary;
  m.label_names = corpus.label_names;
  m.covariate_schema = corpus.covariate_schema;
  m.hyper = config.hyper;
  m.prior = config.prior;
  m.supervised = config.supervised;
  return m;
}

Eigen::MatrixXd mean_of(const std::vector<Eigen::MatrixXd>& draws) {
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(draws.front().rows(), draws.front().cols());
  for (const auto& d : draws) sum += d;
  return sum / static_cast<double>(draws.size());
}

}  // namespace

TrainResult train(const Corpus& corpus, const RunConfig& config, const TrainHooks& hooks,
                  std::optional<ModelState> start) {
  config.validate();
  corpus.validate();
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - t0).count(); };

  TrainResult result;
  result.model = model_shell(corpus, config);
  ModelState state = start ? std::move(*start) : init_model_state(corpus, config);
  if (state.topics.doc_topic.rows() != static_cast<Eigen::Index>(corpus.num_docs()) ||
      state.topics.num_topics() != config.hyper.num_topics) {
    throw ValidationError("start state does not match the corpus and config");
  }

  const std::uint64_t window_start = config.iterations - config.phi_mean_window;
  PhiAccumulator phi_acc;
  Eigen::MatrixXd zbar_sum =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(corpus.num_docs()),
                            static_cast<Eigen::Index>(config.hyper.num_topics));
  std::size_t zbar_count = 0;

  while (state.iteration < config.iterations) {
    gibbs_iteration(state, corpus, config);
    const std::uint64_t done = state.iteration;  // sweeps completed, 1-based
    const std::uint64_t index = done - 1;
    if (index >= window_start) {
      phi_acc.add(state.topics.phi);
      zbar_sum += zbar_matrix(state.topics);
      ++zbar_count;
    }
    if (index >= config.burn_in && (index - config.burn_in) % config.thinning == 0) {
      result.model.eta_draws.push_back(state.regression.eta);
    }
    if (hooks.trace_every != 0 && (done % hooks.trace_every == 0 || done == config.iterations)) {
      const auto ll = log_likelihood(state, corpus, config.hyper);
      TraceRow row{done, ll.do_probit, ll.lda, ll.total(), elapsed()};
      result.trace.push_back(row);
      if (hooks.on_trace) hooks.on_trace(row);
    }
    if (hooks.checkpoint_every != 0 && done % hooks.checkpoint_every == 0 &&
        hooks.on_checkpoint) {
      hooks.on_checkpoint(state);
    }
  }

  if (phi_acc.count() == 0 || result.model.eta_draws.empty()) {
    throw ValidationError("resumed run has no sweeps left inside the averaging window");
  }
  result.model.phi_bar = phi_acc.mean();
  result.model.eta_mean = mean_of(result.model.eta_draws);
  result.zbar_mean = zbar_sum / static_cast<double>(zbar_count);
  result.state = std::move(state);
  result.seconds = elapsed();
  return result;
}

TrainResult train_two_step(const Corpus& corpus, const RunConfig& config,
                           const TrainHooks& hooks) {
  RunConfig lda = config;
  lda.supervised = false;
  TrainResult result = train(corpus, lda, hooks);

  RegressionRunConfig reg;
  reg.prior = config.prior;
  reg.iterations = config.iterations;
  reg.burn_in = config.burn_in;
  reg.thinning = config.thinning;
  reg.seed = config.seed;
  reg.workers = config.workers;
  const Eigen::MatrixXd design = design_matrix(result.zbar_mean, corpus.covariates);
  auto draws = fit_regression(design, corpus.labels, corpus.num_classes(), reg);

  result.model.supervised = true;
  result.model.eta_draws = std::move(draws.eta);
  result.model.eta_mean = draws.eta_mean;
  result.state.regression = std::move(draws.final_state);
  return result;
}

}  // namespace dolda
