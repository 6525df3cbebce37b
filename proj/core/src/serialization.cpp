#include "dolda/serialization.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dolda/error.hpp"

namespace dolda {
namespace {

using nlohmann::json;

template <typename Matrix>
json matrix_to_json(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

template <typename Matrix>
Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols)) {
    throw ValidationError("matrix: data length does not match rows x cols");
  }
  Matrix m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = data[i++].get<typename Matrix::Scalar>();
    }
  }
  return m;
}

json hyper_to_json(const Hyper& h) {
  return json{{"alpha", h.alpha}, {"beta", h.beta}, {"num_topics", h.num_topics}};
}

Hyper hyper_from_json(const json& j) {
  Hyper h;
  h.alpha = j.at("alpha").get<double>();
  h.beta = j.at("beta").get<double>();
  h.num_topics = j.at("num_topics").get<std::uint32_t>();
  h.validate();
  return h;
}

json prior_to_json(const PriorFamily& p) {
  return json{{"kind", p.kind == PriorKind::kHorseshoe ? "horseshoe" : "normal"}, {"c", p.c}};
}

PriorFamily prior_from_json(const json& j) {
  PriorFamily p;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "horseshoe") {
    p.kind = PriorKind::kHorseshoe;
  } else if (kind == "normal") {
    p.kind = PriorKind::kNormal;
  } else {
    throw ValidationError("unknown prior kind '" + kind + "'");
  }
  p.c = j.at("c").get<double>();
  p.validate();
  return p;
}

json schema_to_json(const CovariateSchema& s) {
  json cols = json::array();
  for (const auto& c : s.columns) {
    cols.push_back({{"name", c.name},
                    {"kind", c.kind == CovariateColumn::Kind::kNumeric ? "numeric" : "categorical"},
                    {"levels", c.levels}});
  }
  return cols;
}

CovariateSchema schema_from_json(const json& j) {
  CovariateSchema s;
  for (const auto& c : j) {
    CovariateColumn col;
    col.name = c.at("name").get<std::string>();
    const auto kind = c.at("kind").get<std::string>();
    if (kind == "numeric") {
      col.kind = CovariateColumn::Kind::kNumeric;
    } else if (kind == "categorical") {
      col.kind = CovariateColumn::Kind::kCategorical;
    } else {
      throw ValidationError("unknown covariate kind '" + kind + "'");
    }
    col.levels = c.at("levels").get<std::vector<std::string>>();
    s.columns.push_back(std::move(col));
  }
  return s;
}

void check_schema(const json& j, const char* kind, int version) {
  if (j.value("kind", std::string()) != kind) {
    throw ValidationError(std::string("not a ") + kind + " file");
  }
  const int v = j.at("schema_version").get<int>();
  if (v != version) {
    throw ValidationError(std::string(kind) + " schema_version " + std::to_string(v) +
                          " is not supported (expected " + std::to_string(version) + ")");
  }
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what());
  }
}

template <typename Fn>
auto guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad field: ") + e.what());
  }
}

}  // namespace

std::string serialize_model(const FittedModel& model) {
  json draws = json::array();
  for (const auto& e : model.eta_draws) draws.push_back(matrix_to_json(e));
  json j = {
      {"kind", "dolda-model"},
      {"schema_version", kModelSchemaVersion},
      {"hyper", hyper_to_json(model.hyper)},
      {"prior", prior_to_json(model.prior)},
      {"supervised", model.supervised},
      {"vocabulary", model.vocabulary.types()},
      {"label_names", model.label_names},
      {"covariate_schema", schema_to_json(model.covariate_schema)},
      {"phi_bar", matrix_to_json(model.phi_bar)},
      {"eta_mean", matrix_to_json(model.eta_mean)},
      {"eta_draws", std::move(draws)},
  };
  return j.dump() + "\n";
}

FittedModel parse_model(std::string_view text) {
  const json j = parse_json(text);
  return guarded([&] {
    check_schema(j, "dolda-model", kModelSchemaVersion);
    FittedModel m;
    m.hyper = hyper_from_json(j.at("hyper"));
    m.prior = prior_from_json(j.at("prior"));
    m.supervised = j.at("supervised").get<bool>();
    m.vocabulary = Vocabulary(j.at("vocabulary").get<std::vector<std::string>>());
    m.label_names = j.at("label_names").get<std::vector<std::string>>();
    m.covariate_schema = schema_from_json(j.at("covariate_schema"));
    m.phi_bar = matrix_from_json<RowMatrix>(j.at("phi_bar"));
    m.eta_mean = matrix_from_json<Eigen::MatrixXd>(j.at("eta_mean"));
    for (const auto& e : j.at("eta_draws")) {
      m.eta_draws.push_back(matrix_from_json<Eigen::MatrixXd>(e));
    }
    m.validate();
    return m;
  });
}

void save_model(const FittedModel& model, const std::string& path) {
  write_file_atomic(path, serialize_model(model));
}

FittedModel load_model(const std::string& path) { return parse_model(read_file(path)); }

std::string serialize_snapshot(const ModelState& state, const Hyper& hyper) {
  json offsets = json::array();
  json z = json::array();
  std::uint64_t offset = 0;
  for (const auto& zd : state.topics.z) {
    offsets.push_back(offset);
    for (auto k : zd) z.push_back(k);
    offset += zd.size();
  }
  offsets.push_back(offset);
  json j = {
      {"kind", "dolda-snapshot"},
      {"schema_version", kSnapshotSchemaVersion},
      {"hyper", hyper_to_json(hyper)},
      {"iteration", state.iteration},
      {"z", {{"doc_offsets", std::move(offsets)}, {"topics", std::move(z)}}},
      {"doc_topic", matrix_to_json(state.topics.doc_topic)},
      {"topic_word", matrix_to_json(state.topics.topic_word)},
      {"topic_totals", matrix_to_json(state.topics.topic_totals)},
      {"phi", matrix_to_json(state.topics.phi)},
      {"eta", matrix_to_json(state.regression.eta)},
      {"a", matrix_to_json(state.regression.a)},
      {"tau", matrix_to_json(state.regression.tau)},
      {"lambda", matrix_to_json(state.regression.lambda)},
      {"eta_cross", matrix_to_json(state.eta_cross)},
  };
  return j.dump() + "\n";
}

Snapshot parse_snapshot(std::string_view text) {
  const json j = parse_json(text);
  return guarded([&] {
    check_schema(j, "dolda-snapshot", kSnapshotSchemaVersion);
    Snapshot s;
    s.hyper = hyper_from_json(j.at("hyper"));
    auto& st = s.state;
    st.iteration = j.at("iteration").get<std::uint64_t>();
    const auto offsets = j.at("z").at("doc_offsets").get<std::vector<std::uint64_t>>();
    const auto topics = j.at("z").at("topics").get<std::vector<TopicId>>();
    if (offsets.empty() || offsets.back() != topics.size()) {
      throw ValidationError("snapshot: z offsets do not cover the topic array");
    }
    for (std::size_t d = 0; d + 1 < offsets.size(); ++d) {
      if (offsets[d] > offsets[d + 1]) throw ValidationError("snapshot: z offsets decrease");
      st.topics.z.emplace_back(topics.begin() + static_cast<std::ptrdiff_t>(offsets[d]),
                               topics.begin() + static_cast<std::ptrdiff_t>(offsets[d + 1]));
    }
    st.topics.doc_topic = matrix_from_json<CountMatrix>(j.at("doc_topic"));
    st.topics.topic_word = matrix_from_json<CountMatrix>(j.at("topic_word"));
    st.topics.topic_totals = matrix_from_json<Eigen::VectorXi>(j.at("topic_totals"));
    st.topics.phi = matrix_from_json<RowMatrix>(j.at("phi"));
    st.regression.eta = matrix_from_json<Eigen::MatrixXd>(j.at("eta"));
    st.regression.a = matrix_from_json<Eigen::MatrixXd>(j.at("a"));
    st.regression.tau = matrix_from_json<Eigen::VectorXd>(j.at("tau"));
    st.regression.lambda = matrix_from_json<Eigen::MatrixXd>(j.at("lambda"));
    st.eta_cross = matrix_from_json<Eigen::MatrixXd>(j.at("eta_cross"));
    if (st.topics.num_topics() != s.hyper.num_topics) {
      throw ValidationError("snapshot: phi rows differ from num_topics");
    }
    return s;
  });
}

void save_snapshot(const ModelState& state, const Hyper& hyper, const std::string& path) {
  write_file_atomic(path, serialize_snapshot(state, hyper));
}

Snapshot load_snapshot(const std::string& path) { return parse_snapshot(read_file(path)); }

void write_file_atomic(const std::string& path, std::string_view contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write to '" + tmp + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace dolda
