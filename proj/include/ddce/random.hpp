#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace ddce {

// All randomness goes through an explicitly seeded Mersenne Twister. The
// engine is fully specified by the standard; the sampling helpers below are
// written out by hand because std:: distributions differ across library
// implementations.
using Rng = std::mt19937_64;

// Derives an independent stream from a master seed and a path of integers
// (model index, trial index, purpose tag, ...).
Rng derive_stream(std::uint64_t master, std::initializer_list<std::uint64_t> path);

// Draws a 64-bit value suitable for seeding a child stream.
std::uint64_t next_seed(Rng& rng);

// Uniform on [0, 1).
double uniform01(Rng& rng);

// Uniform on the open interval (lo, hi).
double uniform_open(Rng& rng, double lo, double hi);

// Uniform integer on the closed interval [lo, hi].
std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi);

// Standard normal via Box-Muller.
double standard_normal(Rng& rng);

template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i - 1)));
    std::swap(items[i - 1], items[j]);
  }
}

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  shuffle(std::span<T>(items), rng);
}

// k distinct indices from [0, n), in sampling order.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng);

}  // namespace ddce
