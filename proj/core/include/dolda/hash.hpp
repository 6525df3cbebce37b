#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>

#include "dolda/corpus.hpp"
#include "dolda/sampler.hpp"

namespace dolda {

/// Incremental SHA-256.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, std::size_t size);
  void update(std::string_view s) { update(s.data(), s.size()); }
  template <typename T>
  void update_value(const T& v) { update(&v, sizeof v); }
  /// Lowercase hex digest; the object cannot be updated afterwards.
  std::string hex_digest();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path);

/// Digest of every array in the state, bit for bit.
std::string state_hash(const ModelState& state);

/// Digest of the encoded corpus: tokens, labels, covariates, vocabulary and
/// label names.
std::string corpus_fingerprint(const Corpus& corpus);

}  // namespace dolda
