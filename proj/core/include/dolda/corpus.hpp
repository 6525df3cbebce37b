#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Core>

namespace dolda {

using WordId = std::uint32_t;
using LabelId = std::int32_t;
using Stoplist = std::unordered_set<std::string>;
using TokenDocument = std::vector<std::string>;

/// Bundled English stop list.
const Stoplist& default_stoplist();
/// One word per line; blank lines and lines starting with '#' are ignored.
Stoplist load_stoplist(const std::string& path);

/// Dense bidirectional map between word types and ids 0..V-1.
class Vocabulary {
 public:
  Vocabulary() = default;
  /// Throws ValidationError on duplicate entries.
  explicit Vocabulary(std::vector<std::string> types);

  std::size_t size() const { return types_.size(); }
  bool empty() const { return types_.empty(); }
  const std::string& word(WordId id) const { return types_.at(id); }
  const std::vector<std::string>& types() const { return types_; }
  std::optional<WordId> find(std::string_view word) const;

 private:
  std::vector<std::string> types_;
  std::unordered_map<std::string, WordId> index_;
};

/// How one raw covariate column maps onto model features.
struct CovariateColumn {
  enum class Kind { kNumeric, kCategorical };
  std::string name;
  Kind kind = Kind::kNumeric;
  std::vector<std::string> levels;  // categorical only, sorted

  std::size_t width() const { return kind == Kind::kNumeric ? 1 : levels.size(); }
};

/// Column encoding shared by training and prediction.
struct CovariateSchema {
  std::vector<CovariateColumn> columns;

  std::size_t width() const;
  /// "name" for numeric columns, "name=level" for one-hot columns.
  std::vector<std::string> feature_names() const;
};

/// Raw, string-valued covariates aligned with documents.
struct CovariateTable {
  std::vector<std::string> column_names;
  std::vector<std::vector<std::string>> rows;  // rows[d][column]

  static CovariateTable empty(std::size_t num_docs);
};

/// Model-ready corpus. The covariate matrix carries no intercept column.
struct Corpus {
  std::vector<std::vector<WordId>> docs;
  std::vector<LabelId> labels;
  Eigen::MatrixXd covariates;  // D x P
  std::vector<std::string> label_names;
  std::vector<std::string> doc_ids;
  Vocabulary vocabulary;
  CovariateSchema covariate_schema;

  std::size_t num_docs() const { return docs.size(); }
  std::size_t num_classes() const { return label_names.size(); }
  std::size_t num_covariates() const {
    return static_cast<std::size_t>(covariates.cols());
  }
  std::size_t vocabulary_size() const { return vocabulary.size(); }
  std::size_t num_tokens() const;
  std::size_t doc_length(std::size_t d) const { return docs[d].size(); }
  /// Documents whose tokens were all pruned.
  std::vector<std::size_t> empty_documents() const;

  /// Checks every structural invariant; throws ValidationError.
  void validate() const;
  /// Documents at the given indices, same vocabulary / classes / schema.
  Corpus subset(std::span<const std::size_t> indices) const;
};

struct FoldAssignment {
  std::vector<std::uint32_t> fold_of_doc;
  std::uint32_t num_folds = 0;

  std::vector<std::size_t> test_indices(std::uint32_t fold) const;
  std::vector<std::size_t> train_indices(std::uint32_t fold) const;
};

/// Lowercased alphabetic tokens with stop words removed. Any character that
/// is not an ASCII letter or part of a multi-byte UTF-8 sequence separates
/// tokens.
TokenDocument tokenize(std::string_view text, const Stoplist& stoplist);

/// Keeps the word types left after removing stop words and the rarest types
/// whose cumulative token count stays within rare_mass * N. Ids are assigned
/// by descending frequency, then lexicographically.
Vocabulary build_vocabulary(std::span<const TokenDocument> token_docs,
                            const Stoplist& stoplist, double rare_mass);

/// Infers numeric vs categorical columns. Columns listed in `categorical` are
/// always one-hot encoded; otherwise a column is numeric iff every cell
/// parses as a number.
CovariateSchema infer_covariate_schema(
    const CovariateTable& table, const std::vector<std::string>& categorical = {});

/// Encodes the table under a fixed schema. Unseen categorical levels encode
/// as all zeros. Throws ValidationError if a schema column is missing or a
/// numeric cell does not parse.
Eigen::MatrixXd apply_covariate_schema(const CovariateSchema& schema,
                                       const CovariateTable& table);

/// Indices of documents whose label occurs at least min_class_docs times.
std::vector<std::size_t> documents_in_frequent_classes(
    std::span<const std::string> labels, std::size_t min_class_docs);

struct EncodeOptions {
  std::size_t min_class_docs = 10;
  std::vector<std::string> categorical_columns;
};

/// Builds the model corpus: drops out-of-vocabulary tokens, removes classes
/// with fewer than min_class_docs documents (and those documents), one-hot
/// encodes categorical covariates. Label ids follow sorted label names.
Corpus encode(std::span<const TokenDocument> token_docs,
              std::span<const std::string> labels, const CovariateTable& covariates,
              const Vocabulary& vocabulary, const EncodeOptions& options = {},
              std::span<const std::string> doc_ids = {});

/// Maps tokens onto vocabulary ids, dropping unknown words.
std::vector<WordId> encode_tokens(const TokenDocument& tokens,
                                  const Vocabulary& vocabulary);

/// Stratified, size-balanced fold assignment. Deterministic given seed.
FoldAssignment split_folds(std::span<const LabelId> labels, std::uint32_t folds,
                           std::uint64_t seed);

}  // namespace dolda
