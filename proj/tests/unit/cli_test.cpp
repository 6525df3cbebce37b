#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "commands.hpp"
#include "config.hpp"
#include "dolda/corpus_io.hpp"
#include "dolda/error.hpp"
#include "dolda/hash.hpp"
#include "dolda/serialization.hpp"

namespace dolda::cli {
namespace {

namespace fs = std::filesystem;

const std::string kTinyConfig = std::string(DOLDA_DATA_DIR) + "/tiny/train.cfg";

fs::path fresh_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("dolda_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// The tiny corpus with a shorter run, so that each test stays fast.
Config tiny_config() {
  Config c = load_config(kTinyConfig);
  c.run.iterations = 60;
  c.run.burn_in = 30;
  c.run.phi_mean_window = 10;
  c.run.thinning = 3;
  c.predict.iterations = 40;
  c.predict.burn_in = 20;
  return c;
}

std::vector<std::vector<std::string>> read_rows(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, '\t')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

TEST(Config, UnknownKeysAreListedTogether) {
  try {
    parse_config("num_topics = 3\nbogus = 1\nalso_bad = 2\n", "/tmp");
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("bogus"), std::string::npos);
    EXPECT_NE(msg.find("also_bad"), std::string::npos);
  }
  EXPECT_THROW(parse_config("num_topics 3\n", "/tmp"), ValidationError);
  EXPECT_THROW(parse_config("prior = laplace\n", "/tmp"), ValidationError);
  EXPECT_THROW(parse_config("num_topics = three\n", "/tmp"), ValidationError);
  EXPECT_THROW(parse_config("iterations = 10\nburn_in = 10\n", "/tmp"), ValidationError);
}

TEST(Config, PathsResolveAgainstConfigDirectoryAndRoundTrip) {
  const auto c = parse_config("table_path = a/b.tsv # comment\nnum_topics = 4\nc = 2.5\n", "/data/x");
  EXPECT_EQ(c.source.table_path, "/data/x/a/b.tsv");
  EXPECT_EQ(c.run.hyper.num_topics, 4u);
  EXPECT_DOUBLE_EQ(c.run.prior.c, 2.5);
  const auto again = parse_config(c.to_text(), "/elsewhere");
  EXPECT_EQ(again.to_text(), c.to_text());
}

TEST(Config, EveryKeyIsDocumented) {
  for (const auto& [k, d] : config_keys()) EXPECT_FALSE(d.empty()) << k;
  EXPECT_EQ(config_keys().size(), 31u);
}

TEST(Quantile, Interpolates) {
  EXPECT_DOUBLE_EQ(quantile({3.0, 1.0, 2.0}, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(quantile({0.0, 10.0}, 0.25), 2.5);
  EXPECT_DOUBLE_EQ(quantile({4.0}, 0.975), 4.0);
}

TEST(FormatReal, ShortestRoundTrip) {
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_EQ(std::stod(format_real(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(CmdTrain, RerunWithSameSeedIsByteIdentical) {
  std::ostringstream log;
  const auto c = tiny_config();
  const auto a = cmd_train(c, fresh_dir("train_a").string(), log);
  const auto b = cmd_train(c, fresh_dir("train_b").string(), log);
  EXPECT_EQ(read_file(a.model_path), read_file(b.model_path));
  EXPECT_EQ(read_file(a.trace_path).substr(0, 31), "# dolda trace schema_version=1\n");
  const auto model = load_model(a.model_path);
  EXPECT_EQ(model.num_topics(), 3u);
  EXPECT_EQ(model.label_names, (std::vector<std::string>{"food", "space", "sport"}));
  EXPECT_TRUE(fs::exists(a.manifest_path));
}

TEST(CmdTrain, MissingLabelColumnNamesColumn) {
  auto c = tiny_config();
  c.source.label_column = "category";
  std::ostringstream log;
  try {
    cmd_train(c, fresh_dir("nolabel").string(), log);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("category"), std::string::npos);
  }
}

TEST(CmdTrain, CheckpointsWritten) {
  auto c = tiny_config();
  c.checkpoint_every = 20;
  std::ostringstream log;
  const auto dir = fresh_dir("ckpt");
  cmd_train(c, dir.string(), log);
  const auto snap = load_snapshot((dir / "checkpoints" / "state-40.json").string());
  EXPECT_EQ(snap.state.iteration, 40u);
}

TEST(CmdPredict, OneRowPerDocumentIncludingEmpty) {
  std::ostringstream log;
  const auto c = tiny_config();
  const auto trained = cmd_train(c, fresh_dir("pred_model").string(), log);
  const auto dir = fresh_dir("pred");
  {
    std::ofstream out(dir / "query.tsv");
    out << "doc_id\tlabel\tlength\ttext\nq1\tspace\t900\trocket orbit moon launch\nq2\tfood\t400\t\n";
  }
  auto q = c;
  q.source.table_path = (dir / "query.tsv").string();
  const auto res = cmd_predict(trained.model_path, q, (dir / "out").string(), log);
  const auto rows = read_rows(res.predictions_path);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"doc_id", "predicted_label", "p_food", "p_space", "p_sport"}));
  EXPECT_EQ(rows[1][1], "space");
  EXPECT_EQ(rows[2][0], "q2");
  double sum = 0.0;
  for (std::size_t i = 2; i < rows[2].size(); ++i) sum += std::stod(rows[2][i]);
  EXPECT_NEAR(sum, 1.0, 1e-9);
}

TEST(CmdPredict, TrainingSetAccuracy) {
  std::ostringstream log;
  const auto c = tiny_config();
  const auto trained = cmd_train(c, fresh_dir("acc_model").string(), log);
  const auto res = cmd_predict(trained.model_path, c, fresh_dir("acc").string(), log);
  EXPECT_GE(res.accuracy, 0.9);
}

TEST(CmdPredict, UnknownCovariateColumnsRejected) {
  std::ostringstream log;
  const auto c = tiny_config();
  const auto trained = cmd_train(c, fresh_dir("cov_model").string(), log);
  auto q = c;
  q.source.covariate_columns = {"length", "label"};
  EXPECT_THROW(cmd_predict(trained.model_path, q, fresh_dir("cov").string(), log), ValidationError);
}

TEST(CmdCv, MeanOfFoldsAndProcessInvariance) {
  std::ostringstream log;
  const auto c = tiny_config();
  const auto dir_a = fresh_dir("cv_a"), dir_b = fresh_dir("cv_b");
  const auto a = cmd_cv(c, 5, 1, dir_a.string(), log);
  const auto b = cmd_cv(c, 5, 3, dir_b.string(), log);
  ASSERT_EQ(a.fold_accuracy.size(), 5u);
  double m = 0.0;
  for (double x : a.fold_accuracy) m += x;
  EXPECT_DOUBLE_EQ(a.mean, m / 5.0);
  EXPECT_EQ(a.fold_accuracy, b.fold_accuracy);
  EXPECT_EQ(read_file((dir_a / "cv.tsv").string()), read_file((dir_b / "cv.tsv").string()));
  EXPECT_EQ(read_file((dir_a / "cv_predictions.tsv").string()),
            read_file((dir_b / "cv_predictions.tsv").string()));
  EXPECT_THROW(cmd_cv(c, 1, 1, fresh_dir("cv_bad").string(), log), ValidationError);
}

TEST(CmdCv, EveryDocumentPredictedOnce) {
  std::ostringstream log;
  const auto dir = fresh_dir("cv_once");
  cmd_cv(tiny_config(), 4, 1, dir.string(), log);
  const auto rows = read_rows(dir / "cv_predictions.tsv");
  std::set<std::string> ids;
  for (std::size_t i = 1; i < rows.size(); ++i) ids.insert(rows[i][1]);
  EXPECT_EQ(rows.size(), 51u);
  EXPECT_EQ(ids.size(), 50u);
}

TEST(CmdReport, TopWordIsArgmaxAndOutputStable) {
  std::ostringstream log;
  const auto trained = cmd_train(tiny_config(), fresh_dir("rep_model").string(), log);
  const auto a = fresh_dir("rep_a"), b = fresh_dir("rep_b");
  cmd_report(trained.model_path, 4, a.string(), log);
  cmd_report(trained.model_path, 4, b.string(), log);
  for (const char* f : {"topics.tsv", "coefficients.tsv", "histogram.tsv"}) {
    EXPECT_EQ(read_file((a / f).string()), read_file((b / f).string())) << f;
  }
  const auto model = load_model(trained.model_path);
  const auto rows = read_rows(a / "topics.tsv");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i][1] != "1") continue;
    Eigen::Index arg;
    model.phi_bar.row(std::stol(rows[i][0])).maxCoeff(&arg);
    EXPECT_EQ(rows[i][2], model.vocabulary.word(static_cast<WordId>(arg)));
  }
  EXPECT_EQ(rows.size(), 1u + 3 * 4);
}

TEST(CmdRerun, ReproducesOutputs) {
  std::ostringstream log;
  const auto first = cmd_train(tiny_config(), fresh_dir("rerun_a").string(), log);
  const auto again = fresh_dir("rerun_b");
  cmd_rerun(first.manifest_path, again.string(), log);
  EXPECT_EQ(read_file(first.model_path), read_file((again / "model.json").string()));
}

TEST(CmdSimulate, WritesReadableCorpus) {
  std::ostringstream log;
  SimulateOptions o;
  o.num_docs = 30;
  o.doc_length = 12;
  const auto dir = fresh_dir("sim");
  cmd_simulate(o, dir.string(), log);
  const auto t = read_delimited((dir / "corpus.tsv").string(), '\t');
  EXPECT_EQ(t.rows.size(), 30u);
  EXPECT_NO_THROW(t.column("text"));
}

}  // namespace
}  // namespace dolda::cli
