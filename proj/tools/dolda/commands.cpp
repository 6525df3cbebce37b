#include "commands.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dolda/corpus_io.hpp"
#include "dolda/error.hpp"
#include "dolda/hash.hpp"
#include "dolda/serialization.hpp"
#include "dolda/simulate.hpp"
#include "dolda/train.hpp"

#ifndef DOLDA_VERSION
#define DOLDA_VERSION "unknown"
#endif

namespace dolda::cli {
namespace fs = std::filesystem;
using nlohmann::json;

std::string format_real(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ValidationError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string prepare_dir(const std::string& dir) {
  if (dir.empty()) throw ValidationError("no output directory given");
  fs::create_directories(dir);
  return fs::absolute(dir).lexically_normal().string();
}

std::string table_header(const char* what) {
  return std::string("# dolda ") + what + " schema_version=" +
         std::to_string(kTableSchemaVersion) + "\n";
}

Stoplist stoplist_for(const Config& config) {
  return config.stoplist_path.empty() ? default_stoplist() : load_stoplist(config.stoplist_path);
}

/// Collects the manifest fields of one command run.
class Manifest {
 public:
  Manifest(std::string command, std::string dir) : dir_(std::move(dir)) {
    j_["kind"] = "dolda-manifest";
    j_["schema_version"] = kManifestSchemaVersion;
    j_["command"] = std::move(command);
    j_["code_version"] = DOLDA_VERSION;
    j_["arguments"] = json::object();
    j_["timings"] = json::object();
    j_["outputs"] = json::object();
  }
  void argument(const std::string& key, json value) { j_["arguments"][key] = std::move(value); }
  void config(const Config& c) {
    j_["config"] = c.to_text();
    j_["seed"] = c.run.seed;
  }
  void fingerprint(const std::string& fp) { j_["corpus_fingerprint"] = fp; }
  void timing(const std::string& key, double seconds) { j_["timings"][key] = seconds; }
  void output(const std::string& key, const std::string& file_name) {
    j_["outputs"][key] = {{"path", file_name}, {"sha256", sha256_file(dir_ + "/" + file_name)}};
  }
  std::string write() {
    const auto path = dir_ + "/manifest.json";
    write_file_atomic(path, j_.dump(2) + "\n");
    return path;
  }

 private:
  std::string dir_;
  json j_;
};

std::vector<TokenDocument> tokenize_all(const std::vector<std::string>& texts,
                                        const Stoplist& stoplist) {
  std::vector<TokenDocument> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(tokenize(t, stoplist));
  return out;
}

void write_predictions(const std::string& path, const FittedModel& model,
                       const QueryCorpus& query, const std::vector<Prediction>& predictions) {
  std::ostringstream o;
  o << table_header("predictions");
  o << "doc_id\tpredicted_label";
  for (const auto& name : model.label_names) o << "\tp_" << name;
  o << "\n";
  for (std::size_t d = 0; d < predictions.size(); ++d) {
    o << query.doc_ids[d] << '\t' << model.label_names[predictions[d].label];
    for (Eigen::Index l = 0; l < predictions[d].probabilities.size(); ++l) {
      o << '\t' << format_real(predictions[d].probabilities[l]);
    }
    o << "\n";
  }
  write_file_atomic(path, o.str());
}

double labelled_accuracy(const std::vector<Prediction>& predictions,
                         const std::vector<LabelId>& labels) {
  std::size_t n = 0;
  std::size_t hits = 0;
  for (std::size_t d = 0; d < labels.size(); ++d) {
    if (labels[d] < 0) continue;
    ++n;
    hits += predictions[d].label == labels[d];
  }
  return n == 0 ? -1.0 : static_cast<double>(hits) / static_cast<double>(n);
}

struct FoldResult {
  std::size_t train_docs = 0;
  std::size_t test_docs = 0;
  double accuracy = 0.0;
  std::vector<LabelId> predicted;
};

FoldResult run_fold(const Corpus& corpus, const FoldAssignment& folds, std::uint32_t fold,
                    const Config& config, std::ostream& log) {
  const auto train_idx = folds.train_indices(fold);
  const auto test_idx = folds.test_indices(fold);
  const Corpus train_corpus = corpus.subset(train_idx);
  const Corpus test_corpus = corpus.subset(test_idx);
  std::vector<std::size_t> per_class(corpus.num_classes(), 0);
  for (auto y : train_corpus.labels) ++per_class[static_cast<std::size_t>(y)];
  for (std::size_t l = 0; l < per_class.size(); ++l) {
    if (per_class[l] == 0) {
      log << "warning: class '" << corpus.label_names[l] << "' is absent from training fold "
          << fold << "; its coefficients are driven by the prior only\n";
    }
  }
  TrainHooks hooks;
  hooks.trace_every = 0;
  const auto trained = train(train_corpus, config.run, hooks);
  const auto predictions = predict(trained.model, test_corpus.docs, test_corpus.covariates,
                                   config.run.seed, config.run.workers, config.predict);
  FoldResult r;
  r.train_docs = train_idx.size();
  r.test_docs = test_idx.size();
  r.accuracy = accuracy(predictions, test_corpus.labels);
  for (const auto& p : predictions) r.predicted.push_back(p.label);
  return r;
}

void write_fold_result(const std::string& path, const FoldResult& r) {
  std::ostringstream o;
  o << r.train_docs << ' ' << r.test_docs << ' ' << format_real(r.accuracy) << ' '
    << r.predicted.size();
  for (auto y : r.predicted) o << ' ' << y;
  o << '\n';
  write_file_atomic(path, o.str());
}

FoldResult read_fold_result(const std::string& path) {
  std::istringstream in(read_file(path));
  FoldResult r;
  std::string acc;
  std::size_t n = 0;
  in >> r.train_docs >> r.test_docs >> acc >> n;
  r.accuracy = std::stod(acc);
  r.predicted.resize(n);
  for (auto& y : r.predicted) in >> y;
  if (!in) throw Error("corrupt fold result '" + path + "'");
  return r;
}

}  // namespace

Corpus prepare_training_corpus(const Config& config, std::ostream& log) {
  const RawCorpus raw = load_raw_corpus(config.source, true);
  const Stoplist stoplist = stoplist_for(config);
  const auto tokens = tokenize_all(raw.texts, stoplist);
  const Vocabulary vocab = build_vocabulary(tokens, stoplist, config.rare_mass);
  Corpus corpus = encode(tokens, raw.labels, raw.covariates, vocab, config.encode, raw.doc_ids);
  if (corpus.num_docs() < raw.doc_ids.size()) {
    log << "note: dropped " << raw.doc_ids.size() - corpus.num_docs()
        << " documents in classes with fewer than " << config.encode.min_class_docs
        << " documents\n";
  }
  if (corpus.num_docs() == 0) throw ValidationError("no documents left after the class floor");
  const auto empty = corpus.empty_documents();
  if (!empty.empty()) {
    log << "note: " << empty.size()
        << " documents have no tokens after pruning and keep zero topic proportions\n";
  }
  return corpus;
}

QueryCorpus prepare_query_corpus(const Config& config, const FittedModel& model) {
  std::vector<std::string> expected;
  for (const auto& c : model.covariate_schema.columns) expected.push_back(c.name);
  std::vector<std::string> unknown;
  for (const auto& c : config.source.covariate_columns) {
    if (std::find(expected.begin(), expected.end(), c) == expected.end()) unknown.push_back(c);
  }
  if (!unknown.empty()) {
    std::string msg = "covariate columns unknown to the model:";
    for (const auto& u : unknown) msg += " '" + u + "'";
    throw ValidationError(msg);
  }
  CorpusSource source = config.source;
  source.covariate_columns = expected;  // missing columns are reported by the reader
  const RawCorpus raw = load_raw_corpus(source, false);
  const Stoplist stoplist = stoplist_for(config);

  QueryCorpus q;
  q.doc_ids = raw.doc_ids;
  for (const auto& text : raw.texts) {
    q.docs.push_back(encode_tokens(tokenize(text, stoplist), model.vocabulary));
  }
  q.covariates = apply_covariate_schema(model.covariate_schema, raw.covariates);
  for (const auto& name : raw.labels) {
    auto it = std::find(model.label_names.begin(), model.label_names.end(), name);
    q.labels.push_back(it == model.label_names.end()
                           ? -1
                           : static_cast<LabelId>(it - model.label_names.begin()));
  }
  return q;
}

TrainOutputs cmd_train(const Config& config, const std::string& output_dir, std::ostream& log) {
  const auto t0 = Clock::now();
  const auto dir = prepare_dir(output_dir);
  Manifest manifest("train", dir);
  manifest.config(config);

  const Corpus corpus = prepare_training_corpus(config, log);
  manifest.fingerprint(corpus_fingerprint(corpus));
  manifest.timing("prepare_seconds", seconds_since(t0));
  log << "corpus: " << corpus.num_docs() << " documents, " << corpus.vocabulary_size()
      << " word types, " << corpus.num_tokens() << " tokens, " << corpus.num_classes()
      << " classes, " << corpus.num_covariates() << " covariates\n";

  TrainOutputs out;
  out.trace_path = dir + "/trace.tsv";
  std::ofstream trace(out.trace_path, std::ios::trunc);
  trace << table_header("trace") << "iteration\tdo_loglik\tlda_loglik\ttotal\twall_seconds\n";

  TrainHooks hooks;
  hooks.trace_every = config.trace_every;
  hooks.checkpoint_every = config.checkpoint_every;
  hooks.on_trace = [&](const TraceRow& r) {
    trace << r.iteration << '\t' << format_real(r.do_probit) << '\t' << format_real(r.lda) << '\t'
          << format_real(r.total) << '\t' << format_real(r.seconds) << '\n';
    trace.flush();
  };
  std::vector<std::string> checkpoints;
  hooks.on_checkpoint = [&](const ModelState& state) {
    fs::create_directories(dir + "/checkpoints");
    const auto name = "checkpoints/state-" + std::to_string(state.iteration) + ".json";
    save_snapshot(state, config.run.hyper, dir + "/" + name);
    checkpoints.push_back(name);
  };

  const auto t_train = Clock::now();
  TrainResult result;
  try {
    result = train(corpus, config.run, hooks);
  } catch (const NumericalError& e) {
    throw Error(std::string("sampler aborted: ") + e.what());
  }
  trace.close();
  manifest.timing("train_seconds", seconds_since(t_train));

  out.model_path = dir + "/model.json";
  save_model(result.model, out.model_path);
  manifest.output("model", "model.json");
  manifest.output("trace", "trace.tsv");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    manifest.output("checkpoint_" + std::to_string(i), checkpoints[i]);
  }
  manifest.timing("total_seconds", seconds_since(t0));
  out.manifest_path = manifest.write();
  log << "trained " << config.run.iterations << " iterations in "
      << format_real(std::round(result.seconds * 100) / 100) << " s\n";
  return out;
}

PredictOutputs cmd_predict(const std::string& model_path, const Config& config,
                           const std::string& output_dir, std::ostream& log) {
  const auto t0 = Clock::now();
  const auto dir = prepare_dir(output_dir);
  const auto model_abs = fs::absolute(model_path).lexically_normal().string();
  Manifest manifest("predict", dir);
  manifest.config(config);
  manifest.argument("model", model_abs);
  manifest.argument("model_sha256", sha256_file(model_abs));

  const FittedModel model = load_model(model_abs);
  const QueryCorpus query = prepare_query_corpus(config, model);
  {
    Sha256 h;
    for (const auto& d : query.docs) {
      const std::uint64_t n = d.size();
      h.update_value(n);
      h.update(d.data(), d.size() * sizeof(WordId));
    }
    h.update(query.covariates.data(),
             static_cast<std::size_t>(query.covariates.size()) * sizeof(double));
    manifest.fingerprint(h.hex_digest());
  }
  const auto predictions = predict(model, query.docs, query.covariates, config.run.seed,
                                   config.run.workers, config.predict);
  PredictOutputs out;
  out.predictions_path = dir + "/predictions.tsv";
  write_predictions(out.predictions_path, model, query, predictions);
  manifest.output("predictions", "predictions.tsv");
  if (!query.labels.empty()) {
    out.accuracy = labelled_accuracy(predictions, query.labels);
    if (out.accuracy >= 0.0) {
      manifest.argument("accuracy", out.accuracy);
      log << "accuracy " << format_real(out.accuracy) << " on labelled documents\n";
    }
  }
  manifest.timing("total_seconds", seconds_since(t0));
  out.manifest_path = manifest.write();
  log << "predicted " << predictions.size() << " documents\n";
  return out;
}

CvSummary cmd_cv(const Config& config, std::uint32_t folds, unsigned fold_jobs,
                 const std::string& output_dir, std::ostream& log) {
  const auto t0 = Clock::now();
  if (folds < 2) throw ValidationError("folds must be at least 2");
  const auto dir = prepare_dir(output_dir);
  Manifest manifest("cv", dir);
  manifest.config(config);
  manifest.argument("folds", folds);
  manifest.argument("fold_jobs", fold_jobs);

  const Corpus corpus = prepare_training_corpus(config, log);
  manifest.fingerprint(corpus_fingerprint(corpus));
  const FoldAssignment assignment = split_folds(corpus.labels, folds, config.run.seed);

  std::vector<FoldResult> results(folds);
  if (fold_jobs <= 1) {
    for (std::uint32_t f = 0; f < folds; ++f) {
      results[f] = run_fold(corpus, assignment, f, config, log);
      log << "fold " << f << ": accuracy " << format_real(results[f].accuracy) << "\n";
    }
  } else {
    // One child process per fold, at most fold_jobs at a time.
    std::map<pid_t, std::uint32_t> running;
    std::uint32_t next = 0;
    bool failed = false;
    auto reap = [&] {
      int status = 0;
      const pid_t pid = ::wait(&status);
      if (pid < 0) throw Error("wait for fold process failed");
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) failed = true;
      running.erase(pid);
    };
    log.flush();
    while (next < folds || !running.empty()) {
      if (next < folds && running.size() < fold_jobs) {
        const std::uint32_t f = next++;
        const pid_t pid = ::fork();
        if (pid < 0) throw Error("fork failed");
        if (pid == 0) {
          int code = 0;
          try {
            std::ostringstream child_log;
            auto r = run_fold(corpus, assignment, f, config, child_log);
            write_fold_result(dir + "/.fold-" + std::to_string(f) + ".result", r);
            std::cerr << child_log.str();
          } catch (const std::exception& e) {
            std::cerr << "fold " << f << ": " << e.what() << "\n";
            code = 2;
          }
          std::cerr.flush();
          ::_exit(code);
        }
        running[pid] = f;
      } else {
        reap();
      }
    }
    if (failed) throw Error("a cross-validation fold process failed");
    for (std::uint32_t f = 0; f < folds; ++f) {
      const auto path = dir + "/.fold-" + std::to_string(f) + ".result";
      results[f] = read_fold_result(path);
      fs::remove(path);
      log << "fold " << f << ": accuracy " << format_real(results[f].accuracy) << "\n";
    }
  }

  CvSummary summary;
  for (const auto& r : results) summary.fold_accuracy.push_back(r.accuracy);
  double sum = 0.0;
  for (double a : summary.fold_accuracy) sum += a;
  summary.mean = sum / folds;
  double ss = 0.0;
  for (double a : summary.fold_accuracy) ss += (a - summary.mean) * (a - summary.mean);
  summary.std_dev = std::sqrt(ss / (folds - 1));

  std::ostringstream o;
  o << table_header("cv") << "fold\ttrain_docs\ttest_docs\taccuracy\n";
  for (std::uint32_t f = 0; f < folds; ++f) {
    o << f << '\t' << results[f].train_docs << '\t' << results[f].test_docs << '\t'
      << format_real(results[f].accuracy) << '\n';
  }
  o << "mean\t\t\t" << format_real(summary.mean) << '\n';
  o << "std\t\t\t" << format_real(summary.std_dev) << '\n';
  summary.report_path = dir + "/cv.tsv";
  write_file_atomic(summary.report_path, o.str());
  manifest.output("cv", "cv.tsv");

  std::ostringstream p;
  p << table_header("cv predictions") << "fold\tdoc_id\tlabel\tpredicted_label\n";
  for (std::uint32_t f = 0; f < folds; ++f) {
    const auto test = assignment.test_indices(f);
    for (std::size_t i = 0; i < test.size(); ++i) {
      const auto d = test[i];
      p << f << '\t' << corpus.doc_ids[d] << '\t'
        << corpus.label_names[static_cast<std::size_t>(corpus.labels[d])] << '\t'
        << corpus.label_names[static_cast<std::size_t>(results[f].predicted[i])] << '\n';
    }
  }
  write_file_atomic(dir + "/cv_predictions.tsv", p.str());
  manifest.output("cv_predictions", "cv_predictions.tsv");
  manifest.timing("total_seconds", seconds_since(t0));
  manifest.write();
  log << "mean accuracy " << format_real(summary.mean) << " (std " << format_real(summary.std_dev)
      << ")\n";
  return summary;
}

void cmd_report(const std::string& model_path, std::size_t top_n, const std::string& output_dir,
                std::ostream& log) {
  const auto t0 = Clock::now();
  if (top_n == 0) throw ValidationError("top_n must be positive");
  const auto dir = prepare_dir(output_dir);
  const auto model_abs = fs::absolute(model_path).lexically_normal().string();
  Manifest manifest("report", dir);
  manifest.argument("model", model_abs);
  manifest.argument("top_n", top_n);
  manifest.fingerprint(sha256_file(model_abs));
  const FittedModel model = load_model(model_abs);
  const auto K = model.num_topics();
  const auto V = model.vocabulary.size();

  std::ostringstream topics;
  topics << table_header("topics") << "topic\trank\tword\tphi\n";
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<std::size_t> order(V);
    for (std::size_t v = 0; v < V; ++v) order[v] = v;
    const auto row = model.phi_bar.row(static_cast<Eigen::Index>(k));
    const std::size_t n = std::min(top_n, V);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (row[static_cast<Eigen::Index>(a)] != row[static_cast<Eigen::Index>(b)]) {
                          return row[static_cast<Eigen::Index>(a)] > row[static_cast<Eigen::Index>(b)];
                        }
                        return a < b;
                      });
    for (std::size_t r = 0; r < n; ++r) {
      topics << k << '\t' << r + 1 << '\t' << model.vocabulary.word(static_cast<WordId>(order[r]))
             << '\t' << format_real(row[static_cast<Eigen::Index>(order[r])]) << '\n';
    }
  }
  write_file_atomic(dir + "/topics.tsv", topics.str());
  manifest.output("topics", "topics.tsv");

  std::vector<std::string> features{"intercept"};
  for (std::size_t k = 0; k < K; ++k) features.push_back("topic_" + std::to_string(k));
  for (const auto& f : model.covariate_schema.feature_names()) features.push_back(f);

  std::ostringstream coef;
  coef << table_header("coefficients")
       << "class\tfeature\tmean\tlower_95\tupper_95\tsignal\n";
  const auto J = static_cast<Eigen::Index>(features.size());
  for (std::size_t l = 0; l < model.num_classes(); ++l) {
    struct Row {
      Eigen::Index p;
      double mean, lo, hi;
    };
    std::vector<Row> rows;
    for (Eigen::Index p = 0; p < J; ++p) {
      std::vector<double> draws;
      draws.reserve(model.eta_draws.size());
      for (const auto& e : model.eta_draws) draws.push_back(e(p, static_cast<Eigen::Index>(l)));
      rows.push_back({p, model.eta_mean(p, static_cast<Eigen::Index>(l)), quantile(draws, 0.025),
                      quantile(draws, 0.975)});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      return std::abs(a.mean) > std::abs(b.mean);
    });
    for (const auto& r : rows) {
      const bool signal = r.lo > 0.0 || r.hi < 0.0;
      coef << model.label_names[l] << '\t' << features[static_cast<std::size_t>(r.p)] << '\t'
           << format_real(r.mean) << '\t' << format_real(r.lo) << '\t' << format_real(r.hi)
           << '\t' << (signal ? 1 : 0) << '\n';
    }
  }
  write_file_atomic(dir + "/coefficients.tsv", coef.str());
  manifest.output("coefficients", "coefficients.tsv");

  // Histogram of the posterior means of all non-intercept coefficients.
  constexpr int kBins = 40;
  double extent = 0.0;
  for (Eigen::Index p = 1; p < J; ++p) {
    extent = std::max(extent, model.eta_mean.row(p).cwiseAbs().maxCoeff());
  }
  if (extent == 0.0) extent = 1.0;
  std::vector<std::size_t> counts(kBins, 0);
  for (Eigen::Index p = 1; p < J; ++p) {
    for (Eigen::Index l = 0; l < model.eta_mean.cols(); ++l) {
      const double v = model.eta_mean(p, l);
      int b = static_cast<int>(std::floor((v + extent) / (2 * extent) * kBins));
      counts[static_cast<std::size_t>(std::clamp(b, 0, kBins - 1))]++;
    }
  }
  std::ostringstream hist;
  const char* prior = model.prior.kind == PriorKind::kHorseshoe ? "horseshoe" : "normal";
  hist << table_header("coefficient histogram") << "prior\tbin_lower\tbin_upper\tcount\n";
  for (int b = 0; b < kBins; ++b) {
    const double lo = -extent + 2 * extent * b / kBins;
    const double hi = -extent + 2 * extent * (b + 1) / kBins;
    hist << prior << '\t' << format_real(lo) << '\t' << format_real(hi) << '\t'
         << counts[static_cast<std::size_t>(b)] << '\n';
  }
  write_file_atomic(dir + "/histogram.tsv", hist.str());
  manifest.output("histogram", "histogram.tsv");
  manifest.timing("total_seconds", seconds_since(t0));
  manifest.write();
  log << "report for " << K << " topics and " << model.num_classes() << " classes written to "
      << dir << "\n";
}

void cmd_simulate(const SimulateOptions& options, const std::string& output_dir,
                  std::ostream& log) {
  const auto dir = prepare_dir(output_dir);
  Manifest manifest("simulate", dir);
  manifest.argument("num_topics", options.num_topics);
  manifest.argument("num_classes", options.num_classes);
  manifest.argument("vocabulary_size", options.vocabulary_size);
  manifest.argument("num_docs", options.num_docs);
  manifest.argument("doc_length", options.doc_length);
  manifest.argument("signal", options.signal);
  manifest.argument("seed", options.seed);
  const auto sim = forward_simulate(separated_config(
      options.num_topics, options.num_classes, options.vocabulary_size, options.num_docs,
      options.doc_length, options.seed, options.signal));
  const auto& c = sim.corpus;
  std::ostringstream o;
  write_delimited_row(o, {"doc_id", "label", "text"}, '\t');
  for (std::size_t d = 0; d < c.num_docs(); ++d) {
    std::string text;
    for (auto w : c.docs[d]) {
      if (!text.empty()) text += ' ';
      text += c.vocabulary.word(w);
    }
    write_delimited_row(o, {c.doc_ids[d], c.label_names[static_cast<std::size_t>(c.labels[d])], text},
                        '\t');
  }
  write_file_atomic(dir + "/corpus.tsv", o.str());
  manifest.fingerprint(corpus_fingerprint(c));
  manifest.output("corpus", "corpus.tsv");
  manifest.write();
  log << "wrote " << c.num_docs() << " documents to " << dir << "/corpus.tsv\n";
}

void cmd_rerun(const std::string& manifest_path, const std::string& output_dir,
               std::ostream& log) {
  json m;
  try {
    m = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed manifest: ") + e.what());
  }
  try {
    if (m.value("kind", std::string()) != "dolda-manifest") {
      throw ValidationError("not a dolda manifest");
    }
    if (m.at("schema_version").get<int>() != kManifestSchemaVersion) {
      throw ValidationError("unsupported manifest schema_version");
    }
    const auto command = m.at("command").get<std::string>();
    const auto& args = m.at("arguments");
    auto config = [&] { return parse_config(m.at("config").get<std::string>()); };
    if (command == "train") {
      cmd_train(config(), output_dir, log);
    } else if (command == "predict") {
      cmd_predict(args.at("model").get<std::string>(), config(), output_dir, log);
    } else if (command == "cv") {
      cmd_cv(config(), args.at("folds").get<std::uint32_t>(), args.at("fold_jobs").get<unsigned>(),
             output_dir, log);
    } else if (command == "report") {
      cmd_report(args.at("model").get<std::string>(), args.at("top_n").get<std::size_t>(),
                 output_dir, log);
    } else if (command == "simulate") {
      SimulateOptions o;
      o.num_topics = args.at("num_topics").get<std::size_t>();
      o.num_classes = args.at("num_classes").get<std::size_t>();
      o.vocabulary_size = args.at("vocabulary_size").get<std::size_t>();
      o.num_docs = args.at("num_docs").get<std::size_t>();
      o.doc_length = args.at("doc_length").get<std::size_t>();
      o.signal = args.at("signal").get<double>();
      o.seed = args.at("seed").get<std::uint64_t>();
      cmd_simulate(o, output_dir, log);
    } else {
      throw ValidationError("manifest records unknown command '" + command + "'");
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad manifest field: ") + e.what());
  }
}

}  // namespace dolda::cli
