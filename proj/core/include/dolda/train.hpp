#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "dolda/corpus.hpp"
#include "dolda/predict.hpp"
#include "dolda/sampler.hpp"

namespace dolda {

struct TraceRow {
  std::uint64_t iteration = 0;
  double do_probit = 0.0;
  double lda = 0.0;
  double total = 0.0;
  double seconds = 0.0;  // wall time since the start of the run
};

struct TrainHooks {
  std::uint32_t trace_every = 1;       // 0 disables the trace
  std::uint32_t checkpoint_every = 0;  // 0 disables checkpoints
  std::function<void(const TraceRow&)> on_trace;
  std::function<void(const ModelState&)> on_checkpoint;
};

struct TrainResult {
  FittedModel model;
  ModelState state;
  std::vector<TraceRow> trace;
  Eigen::MatrixXd zbar_mean;  // D x K, averaged over the phi_bar window
  double seconds = 0.0;
};

/// Runs the Gibbs sampler for config.iterations sweeps (or the remainder,
/// when resuming from `start`). Phi draws from the last phi_mean_window
/// sweeps form phi_bar; eta is kept every `thinning` sweeps after burn-in.
TrainResult train(const Corpus& corpus, const RunConfig& config, const TrainHooks& hooks = {},
                  std::optional<ModelState> start = std::nullopt);

/// Unsupervised LDA, then the DO-probit regression on the window-averaged
/// zbar held fixed.
TrainResult train_two_step(const Corpus& corpus, const RunConfig& config,
                           const TrainHooks& hooks = {});

}  // namespace dolda
