#pragma once

#include <cstddef>
#include <cstdint>

#include "dqops/core.hpp"

namespace dqops {

// SplitMix64 stream. The standard distributions are implementation-defined,
// so uniform and normal draws are derived here to keep seeded outputs stable
// across standard libraries.
class Rng {
 public:
  explicit Rng(Seed seed) noexcept : state_(seed.value) {}

  std::uint64_t next() noexcept;
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept;
  /// Standard normal via Box-Muller.
  double normal() noexcept;

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

/// Independent child seed for a (seed, stream) pair.
Seed derive_seed(Seed seed, std::uint64_t stream) noexcept;

/// Counter-based uniform draw in [0, 1): a pure function of (seed, counter).
double uniform_at(Seed seed, std::uint64_t counter) noexcept;

}  // namespace dqops
