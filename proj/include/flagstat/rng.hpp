#pragma once

#include <cstdint>

namespace flagstat {

/// Counter-based random stream. Draw i of stream (seed, stream_id) is a pure
/// function of (seed, stream_id, i), so a stream can be copied, split and
/// replayed without shared state.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream_id = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t position() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;

  /// U[0, 1) with 53 random mantissa bits.
  double uniform() noexcept;
  /// U[lo, hi).
  double uniform(double lo, double hi) noexcept;
  /// Standard normal via Box-Muller; consumes two uniforms per draw.
  double normal() noexcept;

  /// Independent child stream; does not advance this stream.
  RngStream split(std::uint64_t child) const noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Order-sensitive hash of a short list of words, used to derive per-trial seeds.
std::uint64_t hash_words(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) noexcept;

}  // namespace flagstat
