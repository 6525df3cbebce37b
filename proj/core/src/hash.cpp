#include "dolda/hash.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "dolda/error.hpp"

namespace dolda {

struct Sha256::Impl {
  EVP_MD_CTX* ctx = nullptr;
  bool done = false;
};

Sha256::Sha256() : impl_(std::make_unique<Impl>()) {
  impl_->ctx = EVP_MD_CTX_new();
  if (impl_->ctx == nullptr || EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: initialization failed");
  }
}

Sha256::~Sha256() { EVP_MD_CTX_free(impl_->ctx); }

void Sha256::update(const void* data, std::size_t size) {
  if (impl_->done) throw Error("sha256: update after digest");
  if (size > 0) EVP_DigestUpdate(impl_->ctx, data, size);
}

std::string Sha256::hex_digest() {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(impl_->ctx, md, &len);
  impl_->done = true;
  std::ostringstream out;
  for (unsigned i = 0; i < len; ++i) {
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return out.str();
}

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes);
  return h.hex_digest();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  Sha256 h;
  char buf[1 << 15];
  while (in) {
    in.read(buf, sizeof buf);
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return h.hex_digest();
}

namespace {

template <typename Matrix>
void update_matrix(Sha256& h, const Matrix& m) {
  const std::int64_t rows = m.rows();
  const std::int64_t cols = m.cols();
  h.update_value(rows);
  h.update_value(cols);
  h.update(m.data(), static_cast<std::size_t>(m.size()) * sizeof(typename Matrix::Scalar));
}

}  // namespace

std::string state_hash(const ModelState& state) {
  Sha256 h;
  for (const auto& zd : state.topics.z) {
    const std::uint64_t n = zd.size();
    h.update_value(n);
    h.update(zd.data(), zd.size() * sizeof(TopicId));
  }
  update_matrix(h, state.topics.doc_topic);
  update_matrix(h, state.topics.topic_word);
  update_matrix(h, state.topics.topic_totals);
  update_matrix(h, state.topics.phi);
  update_matrix(h, state.regression.eta);
  update_matrix(h, state.regression.a);
  update_matrix(h, state.regression.tau);
  update_matrix(h, state.regression.lambda);
  update_matrix(h, state.eta_cross);
  h.update_value(state.iteration);
  return h.hex_digest();
}

std::string corpus_fingerprint(const Corpus& corpus) {
  Sha256 h;
  for (const auto& doc : corpus.docs) {
    const std::uint64_t n = doc.size();
    h.update_value(n);
    h.update(doc.data(), doc.size() * sizeof(WordId));
  }
  h.update(corpus.labels.data(), corpus.labels.size() * sizeof(LabelId));
  update_matrix(h, corpus.covariates);
  for (const auto& w : corpus.vocabulary.types()) {
    h.update(w);
    h.update("\n");
  }
  for (const auto& l : corpus.label_names) {
    h.update(l);
    h.update("\n");
  }
  for (const auto& f : corpus.covariate_schema.feature_names()) {
    h.update(f);
    h.update("\n");
  }
  return h.hex_digest();
}

}  // namespace dolda
