#pragma once

// Counter-based random numbers (Philox4x32-10, Salmon et al. 2011).
//
// Every draw is a pure function of (seed, stream id, index), so independent
// purposes (layout, arrivals, activations, fading, training) get disjoint
// reproducible streams, and slot-indexed draws give common random numbers
// across policies. Distribution transforms are written out here rather than
// taken from <random> so results do not depend on the standard library.

#include <array>
#include <cstdint>

namespace aoisched {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key);

enum class StreamPurpose : std::uint32_t {
  kLayout = 1,
  kArrival = 2,
  kActivation = 3,
  kFading = 4,
  kTrainingLayout = 5,
  kTrainingWeights = 6,
  kTrainingConditions = 7,
  kParamInit = 8,
  kTest = 15,
};

/// Packs a purpose and up to two 24-bit indices into a stream id.
constexpr std::uint64_t stream_id(StreamPurpose purpose, std::uint32_t a = 0,
                                  std::uint32_t b = 0) {
  return (static_cast<std::uint64_t>(purpose) << 48) |
         (static_cast<std::uint64_t>(a & 0xFFFFFFu) << 24) |
         static_cast<std::uint64_t>(b & 0xFFFFFFu);
}

/// 53-bit uniform on [0, 1).
constexpr double bits_to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Random access draws: value(stream, index).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t bits(std::uint64_t stream, std::uint64_t index) const;
  double uniform(std::uint64_t stream, std::uint64_t index) const {
    return bits_to_unit(bits(stream, index));
  }
  bool bernoulli(std::uint64_t stream, std::uint64_t index, double p) const {
    return uniform(stream, index) < p;
  }
  /// Exp(1) by inversion.
  double exponential(std::uint64_t stream, std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

/// Sequential draws from one stream.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream) : rng_(seed), stream_(stream) {}

  std::uint64_t next_u64() { return rng_.bits(stream_, counter_++); }
  double uniform() { return bits_to_unit(next_u64()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform on (0, 1].
  double uniform_open_low() { return 1.0 - uniform(); }
  double exponential();
  bool bernoulli(double p) { return uniform() < p; }
  /// Standard normal (Box-Muller, one variate per call).
  double normal();

  std::uint64_t position() const { return counter_; }

 private:
  CounterRng rng_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace aoisched
