#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "config.hpp"
#include "dolda/corpus.hpp"
#include "dolda/predict.hpp"

namespace dolda::cli {

inline constexpr int kTableSchemaVersion = 1;
inline constexpr int kManifestSchemaVersion = 1;

/// Reads, tokenizes, prunes and encodes the training corpus of a config.
/// Notes about dropped classes and empty documents go to `log`.
Corpus prepare_training_corpus(const Config& config, std::ostream& log);

/// Documents encoded against a fitted model's vocabulary and covariate schema.
struct QueryCorpus {
  std::vector<std::string> doc_ids;
  std::vector<std::vector<WordId>> docs;
  Eigen::MatrixXd covariates;
  std::vector<LabelId> labels;  // -1 for missing or unknown labels; empty without a label column
};

/// Throws ValidationError when the configured covariate columns differ from
/// the columns the model was trained with.
QueryCorpus prepare_query_corpus(const Config& config, const FittedModel& model);

struct TrainOutputs {
  std::string model_path;
  std::string trace_path;
  std::string manifest_path;
};

TrainOutputs cmd_train(const Config& config, const std::string& output_dir, std::ostream& log);

struct PredictOutputs {
  std::string predictions_path;
  std::string manifest_path;
  double accuracy = -1.0;  // negative when the corpus has no usable labels
};

PredictOutputs cmd_predict(const std::string& model_path, const Config& config,
                           const std::string& output_dir, std::ostream& log);

struct CvSummary {
  std::vector<double> fold_accuracy;
  double mean = 0.0;
  double std_dev = 0.0;
  std::string report_path;
};

/// fold_jobs > 1 runs folds as separate processes; results are identical.
CvSummary cmd_cv(const Config& config, std::uint32_t folds, unsigned fold_jobs,
                 const std::string& output_dir, std::ostream& log);

void cmd_report(const std::string& model_path, std::size_t top_n, const std::string& output_dir,
                std::ostream& log);

/// Re-executes the command recorded in a manifest into output_dir.
void cmd_rerun(const std::string& manifest_path, const std::string& output_dir,
               std::ostream& log);

struct SimulateOptions {
  std::size_t num_topics = 5;
  std::size_t num_classes = 3;
  std::size_t vocabulary_size = 200;
  std::size_t num_docs = 200;
  std::size_t doc_length = 50;
  double signal = 8.0;
  std::uint64_t seed = 1;
};

/// Writes corpus.tsv (doc_id, label, text) from the separated planted setting.
void cmd_simulate(const SimulateOptions& options, const std::string& output_dir,
                  std::ostream& log);

/// Shortest round-trip text of a double.
std::string format_real(double v);

/// Central interval of the draws of one coefficient, by linear interpolation
/// between order statistics.
double quantile(std::vector<double> values, double q);

}  // namespace dolda::cli
