#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "dolda/corpus.hpp"
#include "dolda/corpus_io.hpp"
#include "dolda/error.hpp"

namespace dolda {
namespace {

namespace fs = std::filesystem;

std::vector<TokenDocument> docs_from_counts(const std::map<std::string, int>& counts) {
  TokenDocument doc;
  for (const auto& [w, c] : counts) {
    for (int i = 0; i < c; ++i) doc.push_back(w);
  }
  return {doc};
}

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("dolda_corpus_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

TEST(Tokenize, EmptyText) { EXPECT_TRUE(tokenize("", default_stoplist()).empty()); }

TEST(Tokenize, LowercasesStripsPunctuationAndStopWords) {
  const Stoplist stop{"the"};
  EXPECT_EQ(tokenize("The police, the MURDER!", stop), (TokenDocument{"police", "murder"}));
}

TEST(Tokenize, DuplicatesPreserved) {
  EXPECT_EQ(tokenize("alien space alien", Stoplist{}),
            (TokenDocument{"alien", "space", "alien"}));
}

TEST(Tokenize, DigitsSplitTokensAndUtf8Survives) {
  EXPECT_EQ(tokenize("abc123def x-ray", Stoplist{}),
            (TokenDocument{"abc", "def", "x", "ray"}));
  EXPECT_EQ(tokenize("Caf\xc3\xa9 ok", Stoplist{}), (TokenDocument{"caf\xc3\xa9", "ok"}));
}

TEST(Tokenize, BundledStoplistCoversCommonWords) {
  const auto& stop = default_stoplist();
  for (const char* w : {"the", "and", "of", "is", "which"}) EXPECT_TRUE(stop.contains(w)) << w;
  EXPECT_FALSE(stop.contains("police"));
}

TEST(BuildVocabulary, PrunesCumulativeRareMass) {
  const auto docs = docs_from_counts({{"a", 97}, {"b", 2}, {"c", 1}});
  const auto vocab = build_vocabulary(docs, Stoplist{}, 0.01);
  EXPECT_EQ(vocab.types(), (std::vector<std::string>{"a", "b"}));
}

TEST(BuildVocabulary, ZeroMassKeepsEverything) {
  const auto docs = docs_from_counts({{"a", 3}, {"b", 1}});
  EXPECT_EQ(build_vocabulary(docs, Stoplist{}, 0.0).size(), 2u);
}

TEST(BuildVocabulary, TiesPruneLexicographicallyFirst) {
  const auto docs = docs_from_counts({{"x", 1}, {"y", 1}});
  EXPECT_EQ(build_vocabulary(docs, Stoplist{}, 0.5).types(), (std::vector<std::string>{"y"}));
}

TEST(BuildVocabulary, IdsByDescendingFrequencyThenWord) {
  const auto docs = docs_from_counts({{"m", 5}, {"b", 5}, {"z", 9}, {"a", 1}});
  EXPECT_EQ(build_vocabulary(docs, Stoplist{}, 0.0).types(),
            (std::vector<std::string>{"z", "b", "m", "a"}));
}

TEST(BuildVocabulary, StopWordsNeverEnter) {
  const auto docs = docs_from_counts({{"the", 50}, {"cat", 2}});
  const auto vocab = build_vocabulary(docs, Stoplist{"the"}, 0.0);
  EXPECT_FALSE(vocab.find("the").has_value());
}

TEST(BuildVocabulary, EverythingPrunedIsAnError) {
  const auto docs = docs_from_counts({{"x", 1}, {"y", 1}});
  try {
    build_vocabulary(docs, Stoplist{"x", "y"}, 0.0);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_STREQ(e.what(), "empty vocabulary");
  }
  EXPECT_EQ(build_vocabulary(docs, Stoplist{}, 0.99).size(), 1u);
  EXPECT_THROW(build_vocabulary(docs, Stoplist{}, 1.0), ValidationError);
}

TEST(BuildVocabulary, PrunedMassWithinBudgetProperty) {
  std::mt19937 gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<TokenDocument> docs(5);
    std::size_t total = 0;
    for (auto& d : docs) {
      const int n = 20 + static_cast<int>(gen() % 50);
      for (int i = 0; i < n; ++i) {
        // Zipf-like draw over 40 types.
        const int w = static_cast<int>(40.0 * std::pow(std::uniform_real_distribution<>(0, 1)(gen), 3));
        d.push_back("w" + std::string(1, static_cast<char>('a' + w % 26)) +
                    std::string(1, static_cast<char>('a' + w / 26)));
      }
      total += d.size();
    }
    const double mass = 0.05 * (trial % 5);
    const auto vocab = build_vocabulary(docs, Stoplist{}, mass);
    std::size_t kept = 0;
    for (const auto& d : docs) kept += encode_tokens(d, vocab).size();
    EXPECT_LE(static_cast<double>(total - kept), mass * static_cast<double>(total) + 1e-9);
    // Ids are dense and round trip.
    for (WordId id = 0; id < vocab.size(); ++id) EXPECT_EQ(vocab.find(vocab.word(id)), id);
  }
}

TEST(Vocabulary, DuplicatesRejected) {
  EXPECT_THROW(Vocabulary({"a", "b", "a"}), ValidationError);
}

TEST(Encode, ClassFloorDropsSmallClasses) {
  std::vector<TokenDocument> docs;
  std::vector<std::string> labels;
  for (auto [name, n] : std::vector<std::pair<std::string, int>>{{"A", 12}, {"B", 11}, {"C", 4}}) {
    for (int i = 0; i < n; ++i) {
      docs.push_back({"word"});
      labels.push_back(name);
    }
  }
  const Vocabulary vocab({"word"});
  const auto corpus = encode(docs, labels, CovariateTable::empty(docs.size()), vocab);
  EXPECT_EQ(corpus.num_classes(), 2u);
  EXPECT_EQ(corpus.label_names, (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(corpus.num_docs(), 23u);
}

TEST(Encode, OutOfVocabularyTokensDropped) {
  const Vocabulary vocab({"police"});
  const std::vector<TokenDocument> docs{{"police", "zzz-unknown"}};
  const std::vector<std::string> labels{"x"};
  EncodeOptions opt;
  opt.min_class_docs = 1;
  const auto corpus = encode(docs, labels, CovariateTable::empty(1), vocab, opt);
  EXPECT_EQ(corpus.doc_length(0), 1u);
}

TEST(Encode, EmptyDocumentKeptAndFlagged) {
  const Vocabulary vocab({"a"});
  const std::vector<TokenDocument> docs{{"a"}, {"b"}};
  const std::vector<std::string> labels{"x", "x"};
  EncodeOptions opt;
  opt.min_class_docs = 1;
  const auto corpus = encode(docs, labels, CovariateTable::empty(2), vocab, opt);
  EXPECT_EQ(corpus.num_docs(), 2u);
  EXPECT_EQ(corpus.empty_documents(), (std::vector<std::size_t>{1}));
}

TEST(Encode, CategoricalCovariateOneHot) {
  CovariateTable table;
  table.column_names = {"color", "size"};
  table.rows = {{"red", "1.5"}, {"blue", "2"}, {"red", "-1"}};
  const Vocabulary vocab({"a"});
  const std::vector<TokenDocument> docs(3, TokenDocument{"a"});
  const std::vector<std::string> labels(3, "x");
  EncodeOptions opt;
  opt.min_class_docs = 1;
  const auto corpus = encode(docs, labels, table, vocab, opt);
  ASSERT_EQ(corpus.num_covariates(), 3u);
  EXPECT_EQ(corpus.covariate_schema.feature_names(),
            (std::vector<std::string>{"color=blue", "color=red", "size"}));
  Eigen::MatrixXd expected(3, 3);
  expected << 0, 1, 1.5, 1, 0, 2, 0, 1, -1;
  EXPECT_EQ(corpus.covariates, expected);
}

TEST(CovariateSchema, ForcedCategoricalAndUnseenLevels) {
  CovariateTable table;
  table.column_names = {"year"};
  table.rows = {{"2001"}, {"2002"}};
  const auto schema = infer_covariate_schema(table, {"year"});
  ASSERT_EQ(schema.width(), 2u);
  CovariateTable other;
  other.column_names = {"year"};
  other.rows = {{"1999"}, {"2002"}};
  const auto x = apply_covariate_schema(schema, other);
  EXPECT_EQ(x.row(0).sum(), 0.0);
  EXPECT_EQ(x(1, 1), 1.0);
}

TEST(CovariateSchema, MissingColumnAndBadNumberAreErrors) {
  CovariateTable table;
  table.column_names = {"v"};
  table.rows = {{"1"}};
  const auto schema = infer_covariate_schema(table);
  CovariateTable missing;
  missing.column_names = {"w"};
  missing.rows = {{"1"}};
  EXPECT_THROW(apply_covariate_schema(schema, missing), ValidationError);
  CovariateTable bad;
  bad.column_names = {"v"};
  bad.rows = {{"abc"}};
  EXPECT_THROW(apply_covariate_schema(schema, bad), ValidationError);
}

TEST(SplitFolds, EvenPartition) {
  const std::vector<LabelId> labels(10, 0);
  const auto f = split_folds(labels, 5, 3);
  std::vector<int> sizes(5, 0);
  for (auto k : f.fold_of_doc) ++sizes[k];
  for (int s : sizes) EXPECT_EQ(s, 2);
  std::vector<int> seen(10, 0);
  for (std::uint32_t k = 0; k < 5; ++k) {
    for (auto d : f.test_indices(k)) ++seen[d];
  }
  for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(SplitFolds, DeterministicForSeed) {
  std::vector<LabelId> labels;
  for (int i = 0; i < 50; ++i) labels.push_back(i % 3);
  EXPECT_EQ(split_folds(labels, 5, 9).fold_of_doc, split_folds(labels, 5, 9).fold_of_doc);
  EXPECT_NE(split_folds(labels, 5, 9).fold_of_doc, split_folds(labels, 5, 10).fold_of_doc);
}

TEST(SplitFolds, ElevenDocsGiveSizesThreeTwoTwoTwoTwo) {
  const std::vector<LabelId> labels(11, 0);
  const auto f = split_folds(labels, 5, 1);
  std::vector<int> sizes(5, 0);
  for (auto k : f.fold_of_doc) ++sizes[k];
  std::sort(sizes.begin(), sizes.end(), std::greater<>());
  EXPECT_EQ(sizes, (std::vector<int>{3, 2, 2, 2, 2}));
}

TEST(SplitFolds, StratifiedAndBalancedProperty) {
  std::mt19937 gen(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::uint32_t F = 2 + gen() % 6;
    const std::size_t D = F + gen() % 200;
    const int L = 1 + static_cast<int>(gen() % 5);
    std::vector<LabelId> labels(D);
    for (auto& y : labels) y = static_cast<LabelId>(gen() % static_cast<unsigned>(L));
    const auto f = split_folds(labels, F, trial);
    std::vector<int> sizes(F, 0);
    std::vector<std::vector<int>> per_class(L, std::vector<int>(F, 0));
    for (std::size_t d = 0; d < D; ++d) {
      ++sizes[f.fold_of_doc[d]];
      ++per_class[labels[d]][f.fold_of_doc[d]];
    }
    EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()) -
                  *std::min_element(sizes.begin(), sizes.end()), 1);
    for (const auto& pc : per_class) {
      EXPECT_LE(*std::max_element(pc.begin(), pc.end()) - *std::min_element(pc.begin(), pc.end()), 1);
    }
    for (std::uint32_t k = 0; k < F; ++k) {
      const auto train = f.train_indices(k);
      const auto test = f.test_indices(k);
      EXPECT_EQ(train.size() + test.size(), D);
      for (auto d : test) EXPECT_FALSE(std::binary_search(train.begin(), train.end(), d));
    }
  }
}

TEST(SplitFolds, Errors) {
  const std::vector<LabelId> labels(3, 0);
  EXPECT_THROW(split_folds(labels, 1, 0), ValidationError);
  EXPECT_THROW(split_folds(labels, 4, 0), ValidationError);
}

TEST(Corpus, SubsetKeepsSharedMetadata) {
  Corpus c;
  c.vocabulary = Vocabulary({"a", "b"});
  c.label_names = {"x", "y"};
  c.docs = {{0}, {1, 1}, {0, 1}};
  c.labels = {0, 1, 1};
  c.doc_ids = {"d0", "d1", "d2"};
  c.covariates = Eigen::MatrixXd::Zero(3, 0);
  const std::vector<std::size_t> idx{2, 0};
  const auto s = c.subset(idx);
  EXPECT_EQ(s.doc_ids, (std::vector<std::string>{"d2", "d0"}));
  EXPECT_EQ(s.labels, (std::vector<LabelId>{1, 0}));
  EXPECT_EQ(s.num_tokens(), 3u);
  EXPECT_NO_THROW(s.validate());
}

TEST(Corpus, ValidateCatchesBadIds) {
  Corpus c;
  c.vocabulary = Vocabulary({"a"});
  c.label_names = {"x"};
  c.docs = {{1}};
  c.labels = {0};
  c.covariates = Eigen::MatrixXd::Zero(1, 0);
  EXPECT_THROW(c.validate(), ValidationError);
  c.docs = {{0}};
  c.labels = {1};
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(DelimitedIo, QuotedFieldsRoundTrip) {
  const auto dir = temp_dir("quoted");
  const std::vector<std::string> row{"id 1", "has\ttab", "line\nbreak", "say \"hi\""};
  {
    std::ofstream out(dir / "t.tsv");
    write_delimited_row(out, {"a", "b", "c", "d"}, '\t');
    write_delimited_row(out, row, '\t');
  }
  const auto t = read_delimited((dir / "t.tsv").string(), '\t');
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0], row);
  EXPECT_EQ(t.column("c"), 2u);
  try {
    t.column("label");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("'label'"), std::string::npos);
  }
}

TEST(DelimitedIo, RaggedRowsRejected) {
  const auto dir = temp_dir("ragged");
  write(dir / "t.tsv", "a\tb\n1\n");
  EXPECT_THROW(read_delimited((dir / "t.tsv").string(), '\t'), ValidationError);
}

TEST(LoadRawCorpus, TableFormatWithCovariates) {
  const auto dir = temp_dir("table");
  write(dir / "c.csv", "doc_id,label,text,genre\nd1,pos,\"Good, good film\",drama\nd2,neg,bad,comedy\n");
  CorpusSource src;
  src.table_path = (dir / "c.csv").string();
  src.delimiter = ',';
  src.covariate_columns = {"genre"};
  const auto raw = load_raw_corpus(src, true);
  EXPECT_EQ(raw.doc_ids, (std::vector<std::string>{"d1", "d2"}));
  EXPECT_EQ(raw.texts[0], "Good, good film");
  EXPECT_EQ(raw.labels[1], "neg");
  EXPECT_EQ(raw.covariates.rows[1][0], "comedy");
}

TEST(LoadRawCorpus, DirectoryFormat) {
  const auto dir = temp_dir("directory");
  fs::create_directories(dir / "texts");
  write(dir / "texts" / "a", "alpha text");
  write(dir / "texts" / "b.txt", "beta text");
  write(dir / "meta.tsv", "doc_id\tlabel\na\tx\nb\ty\n");
  CorpusSource src;
  src.format = CorpusSource::Format::kDirectory;
  src.text_dir = (dir / "texts").string();
  src.metadata_path = (dir / "meta.tsv").string();
  const auto raw = load_raw_corpus(src, true);
  EXPECT_EQ(raw.texts, (std::vector<std::string>{"alpha text", "beta text"}));
}

TEST(LoadRawCorpus, MissingLabelColumnNamesTheColumn) {
  const auto dir = temp_dir("nolabel");
  write(dir / "c.tsv", "doc_id\ttext\nd1\thello\n");
  CorpusSource src;
  src.table_path = (dir / "c.tsv").string();
  try {
    load_raw_corpus(src, true);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("label"), std::string::npos);
  }
  EXPECT_TRUE(load_raw_corpus(src, false).labels.empty());
}

}  // namespace
}  // namespace dolda
