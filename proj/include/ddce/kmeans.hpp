#pragma once

#include <cstddef>
#include <vector>

#include "ddce/embedding.hpp"
#include "ddce/random.hpp"

namespace ddce {

struct KMeansResult {
  std::vector<int> labels;
  std::vector<double> centers;  // k x d, row-major
  double inertia = 0.0;
  std::size_t iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding on squared Euclidean distance.
// Runs `restarts` seedings and keeps the lowest inertia; each run stops when
// assignments no longer change or after `max_iter` iterations.
KMeansResult kmeans(const EmbeddingMatrix& x, std::size_t k, Rng& rng, std::size_t restarts = 10,
                    std::size_t max_iter = 100);

// 4 * ceil(M / s) with s = N / O the mean examples per labeled intent, clamped to [1, M].
std::size_t inflated_cluster_count(std::size_t n_labeled, std::size_t n_intents, std::size_t m);

}  // namespace ddce
