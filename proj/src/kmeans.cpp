#include "ddce/kmeans.hpp"

#include <algorithm>
#include <limits>

#include "ddce/error.hpp"

namespace ddce {

namespace {

double sq_dist(std::span<const double> a, const double* b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

std::vector<double> seed_plus_plus(const EmbeddingMatrix& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> centers(k * d);
  auto copy_row = [&](std::size_t c, std::size_t i) {
    std::copy(x.row(i).begin(), x.row(i).end(), centers.begin() + static_cast<std::ptrdiff_t>(c * d));
  };
  copy_row(0, static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(n) - 1)));
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], sq_dist(x.row(i), centers.data() + (c - 1) * d));
      total += nearest[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = uniform01(rng) * total;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        target -= nearest[i];
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(n) - 1));
    }
    copy_row(c, pick);
  }
  return centers;
}

KMeansResult lloyd(const EmbeddingMatrix& x, std::vector<double> centers, std::size_t k,
                   std::size_t max_iter) {
  const std::size_t n = x.rows(), d = x.cols();
  KMeansResult r;
  r.labels.assign(n, -1);
  std::vector<double> sums(k * d);
  std::vector<std::size_t> counts(k);
  for (r.iterations = 0; r.iterations < max_iter; ++r.iterations) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double dd = sq_dist(x.row(i), centers.data() + c * d);
        if (dd < bd) {
          bd = dd;
          best = static_cast<int>(c);
        }
      }
      changed = changed || r.labels[i] != best;
      r.labels[i] = best;
    }
    if (!changed) break;
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(r.labels[i]);
      ++counts[c];
      auto row = x.row(i);
      for (std::size_t j = 0; j < d; ++j) sums[c * d + j] += row[j];
    }
    for (std::size_t c = 0; c < k; ++c)
      if (counts[c])  // an emptied cluster keeps its previous center
        for (std::size_t j = 0; j < d; ++j) centers[c * d + j] = sums[c * d + j] / static_cast<double>(counts[c]);
  }
  r.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    r.inertia += sq_dist(x.row(i), centers.data() + static_cast<std::size_t>(r.labels[i]) * d);
  r.centers = std::move(centers);
  return r;
}

}  // namespace

KMeansResult kmeans(const EmbeddingMatrix& x, std::size_t k, Rng& rng, std::size_t restarts,
                    std::size_t max_iter) {
  if (x.empty()) return {};
  if (k < 1 || k > x.rows()) throw UsageError("k-means needs 1 <= k <= n");
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < std::max<std::size_t>(restarts, 1); ++r) {
    auto run = lloyd(x, seed_plus_plus(x, k, rng), k, max_iter);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

std::size_t inflated_cluster_count(std::size_t n_labeled, std::size_t n_intents, std::size_t m) {
  if (n_labeled == 0 || n_intents == 0) throw DataError("labeled data is empty");
  if (m == 0) return 0;
  // ceil(M / (N / O)) == ceil(M * O / N)
  const std::size_t base = (m * n_intents + n_labeled - 1) / n_labeled;
  return std::clamp<std::size_t>(4 * base, 1, m);
}

}  // namespace ddce
