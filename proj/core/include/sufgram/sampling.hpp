#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <unordered_set>
#include <vector>

namespace sufgram {

/// Uniform integer in [0, bound) from mt19937_64 by rejection. Unlike
/// std::uniform_int_distribution the result is identical on every platform.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

/// k distinct indices from [0, population), sorted ascending. Uses Floyd's
/// algorithm seeded with `seed`; returns every index when k >= population.
inline std::vector<std::uint64_t> sample_indices(std::uint64_t population, std::uint64_t k,
                                                 std::uint64_t seed) {
  std::vector<std::uint64_t> out;
  if (k >= population) {
    out.resize(population);
    for (std::uint64_t i = 0; i < population; ++i) out[i] = i;
    return out;
  }
  std::mt19937_64 rng(seed);
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(k * 2);
  for (std::uint64_t j = population - k; j < population; ++j) {
    std::uint64_t t = uniform_below(rng, j + 1);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  out.assign(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace sufgram
