#pragma once

#include <cstdint>
#include <vector>

namespace measurezip {

// Counter-based generator: output n of stream (key) is mix(key, n). Streams
// are split by hashing a label into the key, so any component can derive an
// independent, reproducible stream from the run seed without sharing state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  // Independent child stream; does not advance this generator.
  [[nodiscard]] Rng split(std::uint64_t label) const;

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Uniform in (0, 1]; safe to take the log of.
  double uniform_open_zero();
  // Standard normal variate (Box-Muller, one value per call).
  double normal();
  // Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  // Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

  [[nodiscard]] std::uint64_t key() const { return key_; }
  [[nodiscard]] std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace measurezip
