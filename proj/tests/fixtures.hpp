#pragma once
// Fixtures shared by the unit and acceptance binaries.

#include <cmath>
#include <vector>

#include "ddce/consensus.hpp"
#include "ddce/optics.hpp"
#include "support.hpp"

namespace testing {

inline ddce::PartitionSet set_of(const std::vector<std::vector<int>>& labelings, std::vector<double> recalls = {}) {
  ddce::PartitionSet ts;
  for (const auto& l : labelings) ts.partitions.push_back(ddce::make_partition(l));
  if (recalls.empty()) recalls.assign(labelings.size(), 1.0);
  ts.val_recalls = std::move(recalls);
  return ts;
}

// Hand-built consensus instances over at most 9 points.
// Instance 3 has a merge tie: sample 6 sits at average distance 0.5 from both
// {3,4,5} and {7,8}, and the lower-index merge is not the optimum.
inline constexpr std::size_t kCspaTieInstance = 3;

inline std::vector<ddce::PartitionSet> cspa_instances() {
  return {
      set_of({{0, 0, 0, 1, 1, 1, 2, 2, 2}, {0, 0, 1, 1, 1, 1, 2, 2, 2}, {0, 0, 0, 1, 1, 2, 2, 2, 2}}),
      set_of({{0, 0, 0, 0, 1, 1, 1, 1}, {0, 0, 0, 1, 1, 1, 1, 1}, {0, 0, 0, 0, 0, 1, 1, 1}}),
      set_of({{0, 0, 1, 1, 2, 2, 3}, {0, 0, 1, 1, 2, 2, 2}, {0, 1, 1, 1, 2, 2, 3}}),
      set_of({{0, 0, 0, 1, 1, 1, 1, 2, 2}, {0, 0, 0, 1, 1, 1, 2, 2, 2}, {0, 0, 1, 1, 1, 1, 2, 2, 2},
              {0, 0, 0, 1, 1, 1, 1, 2, 2}}),
      set_of({{0, 0, 1, 1, 1, 2}, {0, 0, 0, 1, 1, 1}, {0, 0, 1, 1, 2, 2}}),
      set_of({{0, 0, 0, 1, 1, 1, 2, 2, 2}, {0, 0, 0, 1, 1, 1, 2, 2, 2}, {0, 1, 2, 0, 1, 2, 0, 1, 2}}),
  };
}

// Two Gaussian blobs (sigma 0.05, 50 points each, centres 1.0 apart on the
// unit sphere in 8 dimensions) plus 10 uniform noise points labeled -1.
inline Blobs two_blobs(std::uint64_t seed) {
  constexpr std::size_t dim = 8;
  std::vector<double> a(dim, 0.0), b(dim, 0.0);
  a[0] = 1.0;
  b[0] = 0.5;
  b[1] = std::sqrt(0.75);
  auto out = blobs({a, b}, 50, 0.05, seed);
  ddce::Rng rng = ddce::derive_stream(seed, {8});
  ddce::EmbeddingMatrix noise(10, dim);
  for (std::size_t i = 0; i < 10; ++i) {
    noise.ids()[i] = std::to_string(100 + i);
    for (std::size_t k = 0; k < dim; ++k) noise(i, k) = ddce::uniform_open(rng, -1.0, 1.0);
    out.labels.push_back(-1);
  }
  out.x = ddce::vstack(out.x, noise);
  return out;
}

// Parameters that resolve two_blobs: a larger xi keeps within-blob
// reachability wobble from reading as steep areas.
inline const ddce::OpticsParams kTwoBlobParams{0.5, 0.3, 10};

}  // namespace testing
