#pragma once

#include <map>
#include <string>
#include <vector>

#include "dolda/corpus.hpp"
#include "dolda/corpus_io.hpp"
#include "dolda/predict.hpp"
#include "dolda/sampler.hpp"

namespace dolda::cli {

/// Parsed run configuration. Relative paths are resolved against the
/// directory holding the config file.
struct Config {
  CorpusSource source;
  std::string stoplist_path;  // empty: bundled list
  double rare_mass = 0.01;
  EncodeOptions encode;
  RunConfig run;
  NewDocConfig predict;
  std::uint32_t trace_every = 1;
  std::uint32_t checkpoint_every = 0;
  std::uint32_t folds = 5;
  std::string output_dir;

  /// Canonical key=value text; parse_config(to_text()) gives the same config.
  std::string to_text() const;
};

/// Every key the parser accepts, with a one-line description.
const std::vector<std::pair<std::string, std::string>>& config_keys();

/// Flat "key = value" lines; '#' starts a comment. Unknown keys are
/// collected and reported together in one ValidationError.
Config parse_config(const std::string& text, const std::string& base_dir = ".");
Config load_config(const std::string& path);

}  // namespace dolda::cli
