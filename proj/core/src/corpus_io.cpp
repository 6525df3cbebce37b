#include "dolda/corpus_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dolda/error.hpp"

namespace dolda {
namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> parse_records(const std::string& text, char delim) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && field.empty() && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == delim) {
      fields.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      fields.push_back(std::move(field));
      field.clear();
      field_started = false;
      if (!(fields.size() == 1 && fields[0].empty())) records.push_back(std::move(fields));
      fields.clear();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw ValidationError("unterminated quoted field");
  if (field_started || !field.empty() || !fields.empty()) {
    fields.push_back(std::move(field));
    records.push_back(std::move(fields));
  }
  return records;
}

}  // namespace

std::size_t DelimitedTable::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw ValidationError("column '" + name + "' not found in " + source);
  }
  return static_cast<std::size_t>(it - header.begin());
}

DelimitedTable read_delimited(const std::string& path, char delimiter) {
  DelimitedTable table;
  table.source = "'" + path + "'";
  auto records = parse_records(read_file(path), delimiter);
  if (records.empty()) throw ValidationError("empty table " + table.source);
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw ValidationError(table.source + ": row " + std::to_string(r) + " has " +
                            std::to_string(records[r].size()) + " fields, expected " +
                            std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

void write_delimited_row(std::ostream& out, const std::vector<std::string>& fields,
                         char delimiter) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << delimiter;
    const auto& f = fields[i];
    if (f.find_first_of(std::string{delimiter, '"', '\n', '\r'}) != std::string::npos) {
      out << '"';
      for (char c : f) {
        if (c == '"') out << '"';
        out << c;
      }
      out << '"';
    } else {
      out << f;
    }
  }
  out << '\n';
}

RawCorpus load_raw_corpus(const CorpusSource& source, bool require_labels) {
  const bool directory = source.format == CorpusSource::Format::kDirectory;
  const auto table = read_delimited(directory ? source.metadata_path : source.table_path,
                                    source.delimiter);

  const auto id_col = table.column(source.id_column);
  std::optional<std::size_t> label_col;
  if (require_labels ||
      std::find(table.header.begin(), table.header.end(), source.label_column) !=
          table.header.end()) {
    label_col = table.column(source.label_column);
  }
  std::optional<std::size_t> text_col;
  if (!directory) text_col = table.column(source.text_column);
  std::vector<std::size_t> cov_cols;
  for (const auto& name : source.covariate_columns) cov_cols.push_back(table.column(name));

  RawCorpus raw;
  raw.covariates.column_names = source.covariate_columns;
  for (const auto& row : table.rows) {
    raw.doc_ids.push_back(row[id_col]);
    if (label_col) raw.labels.push_back(row[*label_col]);
    if (directory) {
      std::filesystem::path dir(source.text_dir);
      auto path = dir / row[id_col];
      if (!std::filesystem::exists(path)) path = dir / (row[id_col] + ".txt");
      raw.texts.push_back(read_file(path));
    } else {
      raw.texts.push_back(row[*text_col]);
    }
    std::vector<std::string> cov;
    for (auto c : cov_cols) cov.push_back(row[c]);
    raw.covariates.rows.push_back(std::move(cov));
  }
  return raw;
}

}  // namespace dolda
