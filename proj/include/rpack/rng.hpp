#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace rpack {

/// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

/// Stream labels used by the samplers. Values are part of the reproducibility contract.
namespace stream {
inline constexpr std::uint32_t positions = 1;
inline constexpr std::uint32_t timers = 2;
inline constexpr std::uint32_t field = 3;
inline constexpr std::uint32_t count = 4;
inline constexpr std::uint32_t thinning = 5;
inline constexpr std::uint32_t cubature = 6;
inline constexpr std::uint32_t aux = 7;
inline constexpr std::uint32_t replicate = 0xFFFFFFFFu;
}  // namespace stream

struct SeedSpec {
  std::uint64_t master_seed = 1;
  std::uint32_t positions = stream::positions;
  std::uint32_t timers = stream::timers;
  std::uint32_t field = stream::field;

  bool operator==(const SeedSpec&) const = default;
};

/// 64 random bits for (seed, stream, index, sub).
std::uint64_t counter_bits(std::uint64_t seed, std::uint32_t stream, std::uint64_t index,
                           std::uint32_t sub = 0);

/// Uniform on [0,1) with 53 bits.
inline double bits_to_unit(std::uint64_t b) { return static_cast<double>(b >> 11) * 0x1.0p-53; }

inline double counter_uniform(std::uint64_t seed, std::uint32_t stream, std::uint64_t index,
                              std::uint32_t sub = 0) {
  return bits_to_unit(counter_bits(seed, stream, index, sub));
}

/// Uniform on (0,1), safe for logarithms.
inline double counter_uniform_open(std::uint64_t seed, std::uint32_t stream, std::uint64_t index,
                                   std::uint32_t sub = 0) {
  return (static_cast<double>(counter_bits(seed, stream, index, sub) >> 11) + 0.5) * 0x1.0p-53;
}

/// Seed for replicate `rep` of a run with master seed `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t rep);

/// SeedSpec of replicate `rep`; stream labels are kept.
SeedSpec replicate_seed(const SeedSpec& base, std::uint64_t rep);

/// UniformRandomBitGenerator walking a counter stream, for <random> distributions.
class CounterEngine {
 public:
  using result_type = std::uint64_t;

  CounterEngine(std::uint64_t seed, std::uint32_t stream, std::uint32_t sub = 0)
      : seed_(seed), stream_(stream), sub_(sub) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return counter_bits(seed_, stream_, index_++, sub_); }

  double uniform() { return bits_to_unit((*this)()); }
  double uniform_open() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }
  std::uint64_t position() const { return index_; }

 private:
  std::uint64_t seed_;
  std::uint32_t stream_;
  std::uint32_t sub_;
  std::uint64_t index_ = 0;
};

}  // namespace rpack
