#ifndef DMPF_RNG_HPP
#define DMPF_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

#include "dmpf/linalg.hpp"

namespace dmpf {

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

/// Seed for (base, tag, index), e.g. (experiment seed, filter name, trial number).
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index);

/**
 * Seedable pseudo-random stream. Identical seeds give bit-identical draw sequences on a
 * given standard library; each filter run owns one stream.
 */
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

  [[nodiscard]] std::uint64_t seed() const { return seed_; }

  /// Independent child stream keyed by tag and index.
  [[nodiscard]] RngStream split(std::string_view tag, std::uint64_t index = 0) const {
    return RngStream(derive_seed(seed_, tag, index));
  }

  double normal() { return normal_(engine_); }
  /// Uniform on [0, 1).
  double uniform() { return uniform_(engine_); }
  Vector standard_normal(Index n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace dmpf

#endif  // DMPF_RNG_HPP
