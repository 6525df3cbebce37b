#include "dolda/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "dolda/error.hpp"
#include "dolda/rng.hpp"

namespace dolda {
namespace {

bool is_ascii_letter(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::optional<double> parse_number(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
  return value;
}

std::size_t column_index(const CovariateTable& table, const std::string& name) {
  auto it = std::find(table.column_names.begin(), table.column_names.end(), name);
  if (it == table.column_names.end()) {
    throw ValidationError("covariate column '" + name + "' not found");
  }
  return static_cast<std::size_t>(it - table.column_names.begin());
}

}  // namespace

Stoplist load_stoplist(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open stoplist '" + path + "'");
  Stoplist words;
  std::string line;
  while (std::getline(in, line)) {
    auto w = trim(line);
    if (w.empty() || w.front() == '#') continue;
    std::string lowered(w);
    for (auto& c : lowered) {
      if (is_ascii_letter(static_cast<unsigned char>(c))) {
        c = static_cast<char>(c | 0x20);
      }
    }
    words.insert(std::move(lowered));
  }
  return words;
}

Vocabulary::Vocabulary(std::vector<std::string> types) : types_(std::move(types)) {
  index_.reserve(types_.size());
  for (std::size_t i = 0; i < types_.size(); ++i) {
    if (!index_.emplace(types_[i], static_cast<WordId>(i)).second) {
      throw ValidationError("duplicate vocabulary entry '" + types_[i] + "'");
    }
  }
}

std::optional<WordId> Vocabulary::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t CovariateSchema::width() const {
  std::size_t w = 0;
  for (const auto& c : columns) w += c.width();
  return w;
}

std::vector<std::string> CovariateSchema::feature_names() const {
  std::vector<std::string> names;
  for (const auto& c : columns) {
    if (c.kind == CovariateColumn::Kind::kNumeric) {
      names.push_back(c.name);
    } else {
      for (const auto& level : c.levels) names.push_back(c.name + "=" + level);
    }
  }
  return names;
}

CovariateTable CovariateTable::empty(std::size_t num_docs) {
  CovariateTable t;
  t.rows.resize(num_docs);
  return t;
}

std::size_t Corpus::num_tokens() const {
  std::size_t n = 0;
  for (const auto& doc : docs) n += doc.size();
  return n;
}

std::vector<std::size_t> Corpus::empty_documents() const {
  std::vector<std::size_t> out;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (docs[d].empty()) out.push_back(d);
  }
  return out;
}

void Corpus::validate() const {
  const std::size_t D = docs.size();
  if (labels.size() != D) throw ValidationError("corpus: labels/docs length mismatch");
  if (static_cast<std::size_t>(covariates.rows()) != D) {
    throw ValidationError("corpus: covariate rows/docs mismatch");
  }
  if (!doc_ids.empty() && doc_ids.size() != D) {
    throw ValidationError("corpus: doc_ids/docs length mismatch");
  }
  if (covariate_schema.width() != num_covariates()) {
    throw ValidationError("corpus: covariate schema width mismatch");
  }
  const auto V = vocabulary.size();
  for (const auto& doc : docs) {
    for (WordId w : doc) {
      if (w >= V) throw ValidationError("corpus: token id out of vocabulary range");
    }
  }
  const auto L = static_cast<LabelId>(label_names.size());
  for (LabelId y : labels) {
    if (y < 0 || y >= L) throw ValidationError("corpus: label id out of range");
  }
}

Corpus Corpus::subset(std::span<const std::size_t> indices) const {
  Corpus out;
  out.vocabulary = vocabulary;
  out.label_names = label_names;
  out.covariate_schema = covariate_schema;
  out.covariates.resize(static_cast<Eigen::Index>(indices.size()), covariates.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto d = indices[i];
    out.docs.push_back(docs.at(d));
    out.labels.push_back(labels.at(d));
    if (!doc_ids.empty()) out.doc_ids.push_back(doc_ids[d]);
    out.covariates.row(static_cast<Eigen::Index>(i)) =
        covariates.row(static_cast<Eigen::Index>(d));
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::test_indices(std::uint32_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t d = 0; d < fold_of_doc.size(); ++d) {
    if (fold_of_doc[d] == fold) out.push_back(d);
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::train_indices(std::uint32_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t d = 0; d < fold_of_doc.size(); ++d) {
    if (fold_of_doc[d] != fold) out.push_back(d);
  }
  return out;
}

TokenDocument tokenize(std::string_view text, const Stoplist& stoplist) {
  TokenDocument tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty() && !stoplist.contains(current)) tokens.push_back(current);
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_ascii_letter(c)) {
      current.push_back(static_cast<char>(c | 0x20));
    } else if (c >= 0x80) {
      current.push_back(ch);  // keep multi-byte UTF-8 letters intact
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

Vocabulary build_vocabulary(std::span<const TokenDocument> token_docs,
                            const Stoplist& stoplist, double rare_mass) {
  if (!(rare_mass >= 0.0 && rare_mass < 1.0)) {
    throw ValidationError("rare_mass must lie in [0, 1)");
  }
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& doc : token_docs) {
    for (const auto& token : doc) {
      if (stoplist.contains(token)) continue;
      ++counts[token];
      ++total;
    }
  }

  std::vector<std::pair<std::string, std::size_t>> types(counts.begin(), counts.end());
  // Rarest first, ties lexicographic (std::map order is already lexicographic).
  std::stable_sort(types.begin(), types.end(),
                   [](const auto& a, const auto& b) { return a.second < b.second; });

  const double budget = rare_mass * static_cast<double>(total) * (1.0 + 1e-12);
  std::size_t pruned = 0;
  std::size_t pruned_mass = 0;
  while (pruned < types.size() &&
         static_cast<double>(pruned_mass + types[pruned].second) <= budget) {
    pruned_mass += types[pruned].second;
    ++pruned;
  }
  if (pruned == types.size()) throw ValidationError("empty vocabulary");

  std::vector<std::pair<std::string, std::size_t>> kept(types.begin() + pruned, types.end());
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> words;
  words.reserve(kept.size());
  for (auto& [w, c] : kept) words.push_back(std::move(w));
  return Vocabulary(std::move(words));
}

CovariateSchema infer_covariate_schema(const CovariateTable& table,
                                       const std::vector<std::string>& categorical) {
  CovariateSchema schema;
  for (std::size_t j = 0; j < table.column_names.size(); ++j) {
    CovariateColumn col;
    col.name = table.column_names[j];
    bool numeric = std::find(categorical.begin(), categorical.end(), col.name) ==
                   categorical.end();
    std::set<std::string> levels;
    for (const auto& row : table.rows) {
      const auto& cell = row.at(j);
      if (numeric && !parse_number(cell)) numeric = false;
      levels.emplace(trim(cell));
    }
    if (numeric) {
      col.kind = CovariateColumn::Kind::kNumeric;
    } else {
      col.kind = CovariateColumn::Kind::kCategorical;
      col.levels.assign(levels.begin(), levels.end());
    }
    schema.columns.push_back(std::move(col));
  }
  return schema;
}

Eigen::MatrixXd apply_covariate_schema(const CovariateSchema& schema,
                                       const CovariateTable& table) {
  const auto D = static_cast<Eigen::Index>(table.rows.size());
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(D, static_cast<Eigen::Index>(schema.width()));
  Eigen::Index offset = 0;
  for (const auto& col : schema.columns) {
    const auto j = column_index(table, col.name);
    for (Eigen::Index d = 0; d < D; ++d) {
      const auto& cell = table.rows[static_cast<std::size_t>(d)].at(j);
      if (col.kind == CovariateColumn::Kind::kNumeric) {
        auto v = parse_number(cell);
        if (!v) {
          throw ValidationError("covariate '" + col.name + "': cannot parse '" + cell +
                                "' as a number");
        }
        X(d, offset) = *v;
      } else {
        auto it = std::lower_bound(col.levels.begin(), col.levels.end(),
                                   std::string(trim(cell)));
        if (it != col.levels.end() && *it == trim(cell)) {
          X(d, offset + (it - col.levels.begin())) = 1.0;
        }
      }
    }
    offset += static_cast<Eigen::Index>(col.width());
  }
  return X;
}

std::vector<std::size_t> documents_in_frequent_classes(std::span<const std::string> labels,
                                                       std::size_t min_class_docs) {
  std::map<std::string_view, std::size_t> class_size;
  for (const auto& y : labels) ++class_size[y];
  std::vector<std::size_t> keep;
  for (std::size_t d = 0; d < labels.size(); ++d) {
    if (class_size[labels[d]] >= min_class_docs) keep.push_back(d);
  }
  return keep;
}

std::vector<WordId> encode_tokens(const TokenDocument& tokens, const Vocabulary& vocabulary) {
  std::vector<WordId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (auto id = vocabulary.find(t)) ids.push_back(*id);
  }
  return ids;
}

Corpus encode(std::span<const TokenDocument> token_docs, std::span<const std::string> labels,
              const CovariateTable& covariates, const Vocabulary& vocabulary,
              const EncodeOptions& options, std::span<const std::string> doc_ids) {
  const std::size_t D = token_docs.size();
  if (labels.size() != D) throw ValidationError("encode: labels/docs length mismatch");
  if (covariates.rows.size() != D) {
    throw ValidationError("encode: covariate rows/docs length mismatch");
  }
  if (!doc_ids.empty() && doc_ids.size() != D) {
    throw ValidationError("encode: doc_ids/docs length mismatch");
  }

  const auto keep = documents_in_frequent_classes(labels, options.min_class_docs);

  Corpus corpus;
  corpus.vocabulary = vocabulary;
  std::set<std::string> names;
  for (auto d : keep) names.insert(labels[d]);
  corpus.label_names.assign(names.begin(), names.end());

  CovariateTable kept_table;
  kept_table.column_names = covariates.column_names;
  for (auto d : keep) {
    corpus.docs.push_back(encode_tokens(token_docs[d], vocabulary));
    auto it = std::lower_bound(corpus.label_names.begin(), corpus.label_names.end(),
                               labels[d]);
    corpus.labels.push_back(static_cast<LabelId>(it - corpus.label_names.begin()));
    corpus.doc_ids.push_back(doc_ids.empty() ? std::to_string(d) : doc_ids[d]);
    kept_table.rows.push_back(covariates.rows[d]);
  }
  corpus.covariate_schema = infer_covariate_schema(kept_table, options.categorical_columns);
  corpus.covariates = apply_covariate_schema(corpus.covariate_schema, kept_table);
  corpus.validate();
  return corpus;
}

FoldAssignment split_folds(std::span<const LabelId> labels, std::uint32_t folds,
                           std::uint64_t seed) {
  if (folds < 2) throw ValidationError("split_folds: need at least 2 folds");
  if (labels.size() < folds) {
    throw ValidationError("split_folds: more folds than documents");
  }
  std::map<LabelId, std::vector<std::size_t>> by_class;
  for (std::size_t d = 0; d < labels.size(); ++d) by_class[labels[d]].push_back(d);

  FoldAssignment out;
  out.num_folds = folds;
  out.fold_of_doc.assign(labels.size(), 0);
  // Shuffle within each class, then deal round-robin with a running offset:
  // fold sizes differ by at most one overall and within every class.
  std::size_t position = 0;
  for (auto& [label, members] : by_class) {
    RngStream rng(seed, StreamPhase::kFolds, 0, static_cast<std::uint64_t>(label));
    std::shuffle(members.begin(), members.end(), rng);
    for (auto d : members) {
      out.fold_of_doc[d] = static_cast<std::uint32_t>(position % folds);
      ++position;
    }
  }
  return out;
}

}  // namespace dolda
