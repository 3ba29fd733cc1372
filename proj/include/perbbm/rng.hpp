#pragma once

// Counter-based random streams.
//
// Every stream is addressed by (seed, stream id). Draw k of a stream is a pure
// function of (seed, stream id, k), so results never depend on which worker
// evaluates which trial or on the order trials are processed in.

#include <array>
#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>

namespace perbbm::rng {

/// Philox4x32-10 block function (Salmon et al., Random123).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

/// SplitMix64 finalizer; used to derive child stream ids.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Stream id of child `index` of stream `parent`.
constexpr std::uint64_t child_id(std::uint64_t parent, std::uint64_t index) {
  return mix64(parent ^ mix64(index + 0x632BE59BD9B4E019ull));
}

/// A UniformRandomBitGenerator over one (seed, stream id) pair. Output word k
/// is half (k & 1) of Philox block k >> 1.
class Stream {
 public:
  using result_type = std::uint64_t;

  constexpr Stream() = default;
  constexpr Stream(std::uint64_t seed, std::uint64_t id, std::uint64_t counter = 0)
      : seed_(seed), id_(id), counter_(counter) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t k = counter_++;
    if ((k & 1u) == 0 || !cached_) {
      block_ = philox4x32({static_cast<std::uint32_t>(k >> 1), static_cast<std::uint32_t>(k >> 33),
                           static_cast<std::uint32_t>(id_), static_cast<std::uint32_t>(id_ >> 32)},
                          {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
      cached_ = true;
    }
    const std::size_t h = 2 * (k & 1u);
    return (std::uint64_t{block_[h]} << 32) | block_[h + 1];
  }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal (ziggurat).
  double normal() { return boost::random::normal_distribution<double>()(*this); }

  /// Exponential with the given rate (ziggurat).
  double exponential(double rate) { return boost::random::exponential_distribution<double>(rate)(*this); }

  /// Independent stream derived from this one's identity (not its position).
  constexpr Stream split(std::uint64_t index) const { return {seed_, child_id(id_, index)}; }

  constexpr std::uint64_t seed() const { return seed_; }
  constexpr std::uint64_t id() const { return id_; }
  constexpr std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t id_ = 0;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  bool cached_ = false;
};

/// Stream for trial `trial` of an experiment with master seed `seed`.
constexpr Stream trial_stream(std::uint64_t seed, std::uint64_t trial) {
  return Stream(seed, mix64(trial ^ 0xA0761D6478BD642Full));
}

/// Trial streams of an independent family `tag` under the same master seed.
constexpr Stream trial_stream(std::uint64_t seed, std::uint64_t trial, std::uint64_t tag) {
  return Stream(seed, child_id(mix64(tag ^ 0xE7037ED1A0B428DBull), trial));
}

}  // namespace perbbm::rng
