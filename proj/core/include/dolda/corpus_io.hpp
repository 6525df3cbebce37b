#pragma once

#include <string>
#include <vector>

#include "dolda/corpus.hpp"

namespace dolda {

/// Where and how raw documents are stored on disk.
///
/// kDirectory: one UTF-8 file per document in `text_dir`, named `<id>` or
/// `<id>.txt`, plus a delimited metadata file with a header row.
/// kTable: a single delimited file with a header row and a text column.
struct CorpusSource {
  enum class Format { kDirectory, kTable };
  Format format = Format::kTable;
  std::string text_dir;
  std::string metadata_path;
  std::string table_path;
  char delimiter = '\t';
  std::string id_column = "doc_id";
  std::string label_column = "label";
  std::string text_column = "text";
  std::vector<std::string> covariate_columns;
};

/// Documents as read from disk, before tokenization.
struct RawCorpus {
  std::vector<std::string> doc_ids;
  std::vector<std::string> texts;
  std::vector<std::string> labels;  // empty when no label column was read
  CovariateTable covariates;
};

/// Delimited file with a header row. Fields may be double-quoted; quoted
/// fields may contain the delimiter, newlines and "" escapes.
struct DelimitedTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Throws ValidationError naming the column and file when absent.
  std::size_t column(const std::string& name) const;
  std::string source;
};

DelimitedTable read_delimited(const std::string& path, char delimiter);
void write_delimited_row(std::ostream& out, const std::vector<std::string>& fields,
                         char delimiter);

/// Reads the corpus. With require_labels the label column must exist; else it
/// is read only when present.
RawCorpus load_raw_corpus(const CorpusSource& source, bool require_labels);

}  // namespace dolda
