#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "dolda/error.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

std::string keys_help() {
  std::string s = "Config keys (key = value, '#' comments):\n";
  for (const auto& [k, d] : dolda::cli::config_keys()) s += "  " + k + ": " + d + "\n";
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace dolda::cli;
  CLI::App app{"dolda: supervised topic model with a horseshoe DO-probit classifier"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  std::string model_path;
  std::string corpus_path;
  std::string manifest_path;
  std::uint32_t folds = 0;
  unsigned fold_jobs = 1;
  std::size_t top_n = 10;
  SimulateOptions sim;

  auto* train = app.add_subcommand("train", "fit a model on the configured corpus");
  train->add_option("-c,--config", config_path, "config file")->required();
  train->add_option("-o,--output-dir", output_dir, "output directory (default: output_dir key)");

  auto* predict = app.add_subcommand("predict", "score documents with a fitted model");
  predict->add_option("-m,--model", model_path, "model.json")->required();
  predict->add_option("-c,--config", config_path, "config describing the corpus")->required();
  predict->add_option("--corpus", corpus_path, "table file overriding table_path");
  predict->add_option("-o,--output-dir", output_dir, "output directory")->required();

  auto* cv = app.add_subcommand("cv", "stratified k-fold cross-validation");
  cv->add_option("-c,--config", config_path, "config file")->required();
  cv->add_option("-k,--folds", folds, "folds (default: folds key)");
  cv->add_option("-j,--fold-jobs", fold_jobs, "run this many folds as parallel processes")
      ->check(CLI::PositiveNumber);
  cv->add_option("-o,--output-dir", output_dir, "output directory (default: output_dir key)");

  auto* report = app.add_subcommand("report", "top words, coefficient tables, histograms");
  report->add_option("-m,--model", model_path, "model.json")->required();
  report->add_option("-n,--top-n", top_n, "words per topic")->check(CLI::PositiveNumber);
  report->add_option("-o,--output-dir", output_dir, "output directory")->required();

  auto* rerun = app.add_subcommand("rerun", "repeat the run recorded in a manifest");
  rerun->add_option("manifest", manifest_path, "manifest.json")->required();
  rerun->add_option("-o,--output-dir", output_dir, "output directory")->required();

  auto* simulate = app.add_subcommand("simulate", "write a planted synthetic corpus");
  simulate->add_option("--topics", sim.num_topics);
  simulate->add_option("--classes", sim.num_classes);
  simulate->add_option("--vocabulary", sim.vocabulary_size);
  simulate->add_option("--docs", sim.num_docs);
  simulate->add_option("--length", sim.doc_length);
  simulate->add_option("--signal", sim.signal);
  simulate->add_option("--seed", sim.seed);
  simulate->add_option("-o,--output-dir", output_dir, "output directory")->required();

  try {
    app.footer(keys_help());
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  auto& log = std::cerr;
  try {
    auto out_dir = [&](const Config& c) {
      if (!output_dir.empty()) return output_dir;
      if (c.output_dir.empty()) throw dolda::ValidationError("no output directory: pass -o or set output_dir");
      return c.output_dir;
    };
    if (*train) {
      const Config c = load_config(config_path);
      cmd_train(c, out_dir(c), log);
    } else if (*predict) {
      Config c = load_config(config_path);
      if (!corpus_path.empty()) {
        c.source.format = dolda::CorpusSource::Format::kTable;
        c.source.table_path = std::filesystem::absolute(corpus_path).lexically_normal().string();
      }
      cmd_predict(model_path, c, output_dir, log);
    } else if (*cv) {
      const Config c = load_config(config_path);
      cmd_cv(c, folds == 0 ? c.folds : folds, fold_jobs, out_dir(c), log);
    } else if (*report) {
      cmd_report(model_path, top_n, output_dir, log);
    } else if (*rerun) {
      cmd_rerun(manifest_path, output_dir, log);
    } else if (*simulate) {
      cmd_simulate(sim, output_dir, log);
    }
  } catch (const dolda::ValidationError& e) {
    log << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
