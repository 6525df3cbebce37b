#include "config.hpp"

#include <charconv>
#include <filesystem>
#include <set>
#include <sstream>

#include "dolda/error.hpp"
#include "dolda/serialization.hpp"

namespace dolda::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += items[i];
  }
  return out;
}

template <typename T>
T parse_integer(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ValidationError("config key '" + key + "': '" + value + "' is not a valid integer");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ValidationError("config key '" + key + "': '" + value + "' is not a number");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ValidationError("config key '" + key + "': expected true or false");
}

char parse_delimiter(const std::string& value) {
  if (value == "tab" || value == "\\t") return '\t';
  if (value == "comma") return ',';
  if (value.size() == 1) return value[0];
  throw ValidationError("config key 'delimiter': use tab, comma or a single character");
}

std::string delimiter_text(char c) {
  if (c == '\t') return "tab";
  if (c == ',') return "comma";
  return std::string(1, c);
}

std::string real_text(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string resolve(const std::string& base, const std::string& path) {
  if (path.empty()) return path;
  std::filesystem::path p(path);
  if (p.is_absolute()) return p.lexically_normal().string();
  return std::filesystem::absolute(std::filesystem::path(base) / p).lexically_normal().string();
}

}  // namespace

const std::vector<std::pair<std::string, std::string>>& config_keys() {
  static const std::vector<std::pair<std::string, std::string>> keys = {
      {"corpus_format", "table | directory"},
      {"table_path", "delimited file with a text column (table format)"},
      {"text_dir", "directory of <doc_id> or <doc_id>.txt files (directory format)"},
      {"metadata_path", "delimited metadata file (directory format)"},
      {"delimiter", "tab | comma | single character"},
      {"id_column", "document id column"},
      {"label_column", "class label column"},
      {"text_column", "document text column (table format)"},
      {"covariate_columns", "comma-separated extra covariate columns"},
      {"categorical_columns", "covariate columns to one-hot encode"},
      {"stoplist", "stop word file, one word per line (default: bundled English list)"},
      {"rare_mass", "token mass of the rarest types to prune, in [0, 1)"},
      {"min_class_docs", "drop classes with fewer documents"},
      {"num_topics", "K"},
      {"alpha", "document-topic Dirichlet prior"},
      {"beta", "topic-word Dirichlet prior"},
      {"prior", "horseshoe | normal"},
      {"c", "prior standard deviation of the intercept and of the normal prior"},
      {"iterations", "Gibbs sweeps"},
      {"burn_in", "sweeps discarded before keeping eta draws"},
      {"phi_mean_window", "final sweeps averaged into phi_bar"},
      {"thinning", "keep every n-th eta draw after burn-in"},
      {"seed", "random seed"},
      {"workers", "threads"},
      {"supervised", "false runs plain LDA"},
      {"predict_iterations", "sweeps per new document"},
      {"predict_burn_in", "discarded sweeps per new document"},
      {"trace_every", "log-likelihood trace interval (0: off)"},
      {"checkpoint_every", "snapshot interval (0: off)"},
      {"folds", "cross-validation folds"},
      {"output_dir", "where outputs are written"},
  };
  return keys;
}

Config parse_config(const std::string& text, const std::string& base_dir) {
  std::map<std::string, std::string> values;
  std::vector<std::string> unknown;
  std::vector<std::string> malformed;
  std::set<std::string> known;
  for (const auto& [k, _] : config_keys()) known.insert(k);

  std::stringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      malformed.push_back("line " + std::to_string(line_no));
      continue;
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (!known.contains(key)) {
      unknown.push_back(key);
      continue;
    }
    values[key] = value;
  }
  if (!unknown.empty() || !malformed.empty()) {
    std::string msg = "invalid config:";
    if (!unknown.empty()) msg += " unknown keys [" + join_list(unknown) + "]";
    if (!malformed.empty()) msg += " lines without '=' [" + join_list(malformed) + "]";
    throw ValidationError(msg);
  }

  Config c;
  auto get = [&](const char* key) -> const std::string* {
    auto it = values.find(key);
    return it == values.end() ? nullptr : &it->second;
  };
  if (auto v = get("corpus_format")) {
    if (*v == "table") {
      c.source.format = CorpusSource::Format::kTable;
    } else if (*v == "directory") {
      c.source.format = CorpusSource::Format::kDirectory;
    } else {
      throw ValidationError("config key 'corpus_format': expected table or directory");
    }
  }
  if (auto v = get("table_path")) c.source.table_path = resolve(base_dir, *v);
  if (auto v = get("text_dir")) c.source.text_dir = resolve(base_dir, *v);
  if (auto v = get("metadata_path")) c.source.metadata_path = resolve(base_dir, *v);
  if (auto v = get("delimiter")) c.source.delimiter = parse_delimiter(*v);
  if (auto v = get("id_column")) c.source.id_column = *v;
  if (auto v = get("label_column")) c.source.label_column = *v;
  if (auto v = get("text_column")) c.source.text_column = *v;
  if (auto v = get("covariate_columns")) c.source.covariate_columns = split_list(*v);
  if (auto v = get("categorical_columns")) c.encode.categorical_columns = split_list(*v);
  if (auto v = get("stoplist")) c.stoplist_path = resolve(base_dir, *v);
  if (auto v = get("rare_mass")) c.rare_mass = parse_real("rare_mass", *v);
  if (auto v = get("min_class_docs")) {
    c.encode.min_class_docs = parse_integer<std::size_t>("min_class_docs", *v);
  }
  if (auto v = get("num_topics")) c.run.hyper.num_topics = parse_integer<std::uint32_t>("num_topics", *v);
  if (auto v = get("alpha")) c.run.hyper.alpha = parse_real("alpha", *v);
  if (auto v = get("beta")) c.run.hyper.beta = parse_real("beta", *v);
  if (auto v = get("prior")) {
    if (*v == "horseshoe") {
      c.run.prior.kind = PriorKind::kHorseshoe;
    } else if (*v == "normal") {
      c.run.prior.kind = PriorKind::kNormal;
    } else {
      throw ValidationError("config key 'prior': expected horseshoe or normal");
    }
  }
  if (auto v = get("c")) c.run.prior.c = parse_real("c", *v);
  if (auto v = get("iterations")) c.run.iterations = parse_integer<std::uint32_t>("iterations", *v);
  if (auto v = get("burn_in")) c.run.burn_in = parse_integer<std::uint32_t>("burn_in", *v);
  if (auto v = get("phi_mean_window")) {
    c.run.phi_mean_window = parse_integer<std::uint32_t>("phi_mean_window", *v);
  }
  if (auto v = get("thinning")) c.run.thinning = parse_integer<std::uint32_t>("thinning", *v);
  if (auto v = get("seed")) c.run.seed = parse_integer<std::uint64_t>("seed", *v);
  if (auto v = get("workers")) c.run.workers = parse_integer<unsigned>("workers", *v);
  if (auto v = get("supervised")) c.run.supervised = parse_bool("supervised", *v);
  if (auto v = get("predict_iterations")) {
    c.predict.iterations = parse_integer<std::uint32_t>("predict_iterations", *v);
  }
  if (auto v = get("predict_burn_in")) {
    c.predict.burn_in = parse_integer<std::uint32_t>("predict_burn_in", *v);
  }
  if (auto v = get("trace_every")) c.trace_every = parse_integer<std::uint32_t>("trace_every", *v);
  if (auto v = get("checkpoint_every")) {
    c.checkpoint_every = parse_integer<std::uint32_t>("checkpoint_every", *v);
  }
  if (auto v = get("folds")) c.folds = parse_integer<std::uint32_t>("folds", *v);
  if (auto v = get("output_dir")) c.output_dir = resolve(base_dir, *v);

  c.run.validate();
  if (!(c.rare_mass >= 0.0 && c.rare_mass < 1.0)) {
    throw ValidationError("config key 'rare_mass': must lie in [0, 1)");
  }
  if (c.predict.burn_in >= c.predict.iterations) {
    throw ValidationError("config: predict_burn_in must be below predict_iterations");
  }
  return c;
}

Config load_config(const std::string& path) {
  const auto base = std::filesystem::absolute(path).parent_path().string();
  return parse_config(read_file(path), base);
}

std::string Config::to_text() const {
  std::ostringstream o;
  o << "corpus_format = "
    << (source.format == CorpusSource::Format::kTable ? "table" : "directory") << "\n";
  if (!source.table_path.empty()) o << "table_path = " << source.table_path << "\n";
  if (!source.text_dir.empty()) o << "text_dir = " << source.text_dir << "\n";
  if (!source.metadata_path.empty()) o << "metadata_path = " << source.metadata_path << "\n";
  o << "delimiter = " << delimiter_text(source.delimiter) << "\n";
  o << "id_column = " << source.id_column << "\n";
  o << "label_column = " << source.label_column << "\n";
  o << "text_column = " << source.text_column << "\n";
  o << "covariate_columns = " << join_list(source.covariate_columns) << "\n";
  o << "categorical_columns = " << join_list(encode.categorical_columns) << "\n";
  if (!stoplist_path.empty()) o << "stoplist = " << stoplist_path << "\n";
  o << "rare_mass = " << real_text(rare_mass) << "\n";
  o << "min_class_docs = " << encode.min_class_docs << "\n";
  o << "num_topics = " << run.hyper.num_topics << "\n";
  o << "alpha = " << real_text(run.hyper.alpha) << "\n";
  o << "beta = " << real_text(run.hyper.beta) << "\n";
  o << "prior = " << (run.prior.kind == PriorKind::kHorseshoe ? "horseshoe" : "normal") << "\n";
  o << "c = " << real_text(run.prior.c) << "\n";
  o << "iterations = " << run.iterations << "\n";
  o << "burn_in = " << run.burn_in << "\n";
  o << "phi_mean_window = " << run.phi_mean_window << "\n";
  o << "thinning = " << run.thinning << "\n";
  o << "seed = " << run.seed << "\n";
  o << "workers = " << run.workers << "\n";
  o << "supervised = " << (run.supervised ? "true" : "false") << "\n";
  o << "predict_iterations = " << predict.iterations << "\n";
  o << "predict_burn_in = " << predict.burn_in << "\n";
  o << "trace_every = " << trace_every << "\n";
  o << "checkpoint_every = " << checkpoint_every << "\n";
  o << "folds = " << folds << "\n";
  if (!output_dir.empty()) o << "output_dir = " << output_dir << "\n";
  return o.str();
}

}  // namespace dolda::cli
