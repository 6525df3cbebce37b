#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace dolda {

/// Sampler phases that own disjoint families of random streams.
enum class StreamPhase : std::uint64_t {
  kInit = 1,
  kLatent = 2,
  kRegression = 3,
  kTopicIndicator = 4,
  kPhi = 5,
  kPredict = 6,
  kSimulate = 7,
  kFolds = 8,
};

/// Packs (phase, iteration, entity) into a stream id.
///
/// Layout: phase in the top 8 bits, iteration in the next 24, entity in the
/// low 32. Every document, class and topic therefore draws from its own
/// stream on every iteration, which is what makes a sweep independent of
/// how the work is split across threads.
constexpr std::uint64_t stream_key(StreamPhase phase, std::uint64_t iteration,
                                   std::uint64_t entity) {
  return (static_cast<std::uint64_t>(phase) << 56) |
         ((iteration & 0xFFFFFFull) << 32) | (entity & 0xFFFFFFFFull);
}

/// A reproducible random stream identified by (seed, stream_id).
///
/// Satisfies UniformRandomBitGenerator so it can drive <random>
/// distributions directly.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);
  RngStream(std::uint64_t seed, StreamPhase phase, std::uint64_t iteration,
            std::uint64_t entity)
      : RngStream(seed, stream_key(phase, iteration, entity)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return engine_(); }

  /// Uniform draw on the open interval (0, 1).
  double uniform();
  /// Standard normal draw.
  double normal() { return normal_(engine_); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace dolda
