#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "ugc_sentinel/error.hpp"

namespace ugcs {

// Deterministic RNG used everywhere randomness is needed.
//
// The engine is mt19937_64 (bit-exact across platforms by the standard).
// Shuffling and bounded draws are implemented here instead of through
// std::shuffle / std::uniform_int_distribution, whose outputs are
// implementation-defined; this keeps seeded runs reproducible across
// standard libraries. Provenance notes record the algorithm name.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64/fisher-yates";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, bound) by rejection sampling.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound == 0) throw ValidationError("Rng::next_below: bound must be > 0");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % bound;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (deterministic, no cached spare).
  double next_gaussian() {
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Indices of a uniform sample of n items out of population, without
  // replacement. Output order is the selection order.
  std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n) {
    if (n > population)
      throw ValidationError("Rng::sample_indices: n exceeds population");
    std::vector<std::size_t> idx(population);
    for (std::size_t i = 0; i < population; ++i) idx[i] = i;
    // Partial Fisher-Yates: settle the first n slots only.
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(next_below(population - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    return idx;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ugcs
