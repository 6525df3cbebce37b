#pragma once

#include <string>
#include <string_view>

#include "dolda/predict.hpp"
#include "dolda/sampler.hpp"

namespace dolda {

inline constexpr int kModelSchemaVersion = 1;
inline constexpr int kSnapshotSchemaVersion = 1;

/// JSON text of a fitted model. Doubles are written in shortest round-trip
/// form, so parse(serialize(m)) reproduces m exactly.
std::string serialize_model(const FittedModel& model);
FittedModel parse_model(std::string_view text);
void save_model(const FittedModel& model, const std::string& path);
FittedModel load_model(const std::string& path);

/// Sampler state plus the hyperparameters it was drawn under.
struct Snapshot {
  ModelState state;
  Hyper hyper;
};

/// z is stored token-major as one flat array with per-document offsets.
std::string serialize_snapshot(const ModelState& state, const Hyper& hyper);
Snapshot parse_snapshot(std::string_view text);
void save_snapshot(const ModelState& state, const Hyper& hyper, const std::string& path);
Snapshot load_snapshot(const std::string& path);

/// Writes `contents` to `path` through a temporary file and rename.
void write_file_atomic(const std::string& path, std::string_view contents);
std::string read_file(const std::string& path);

}  // namespace dolda
