#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace hasod {

// Counter-based SplitMix64 stream: draw i is mix64(key + i * 0x9E3779B97F4A7C15).
// child(index) derives a fresh key from (key, index) with the Murmur3 fmix64
// finalizer, so a child depends only on its parent's key and never on how many
// draws the parent has already produced.
class RandomStream {
 public:
  static constexpr std::string_view kAlgorithm = "splitmix64-counter/fmix64-child/v1";

  explicit RandomStream(std::uint64_t seed);

  RandomStream child(std::uint64_t index) const;

  std::uint64_t next_u64();
  // 53-bit mantissa, in [0, 1).
  double next_uniform();
  double next_normal();
  // Unbiased integer in [0, n).
  std::size_t next_index(std::size_t n);
  std::vector<std::size_t> next_permutation(std::size_t n);

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t draws() const noexcept { return counter_; }

 private:
  RandomStream(std::uint64_t key, bool /*raw*/) : key_(key) {}

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

// Seed-level helper used for replication bookkeeping.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace hasod
