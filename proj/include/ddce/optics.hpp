#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ddce/embedding.hpp"
#include "ddce/partition.hpp"

namespace ddce {

enum class Metric { kCosine, kEuclidean };

std::string to_string(Metric m);
Metric parse_metric(const std::string& s);

struct OpticsParams {
  double max_eps = 0.25;
  double xi = 0.05;
  std::size_t min_samples = 5;

  // Throws UsageError unless max_eps > 0, 0 < xi < 1, min_samples >= 2, all finite.
  void validate() const;
  bool operator==(const OpticsParams&) const = default;
};

// Cosine distance is 1 - cos(a, b), computed as half the squared Euclidean
// distance between the L2-normalized rows so that identical rows are exactly 0.
double distance(std::span<const double> a, std::span<const double> b, Metric metric);

// Dense symmetric n x n distance matrix.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  DistanceMatrix(const EmbeddingMatrix& x, Metric metric);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return {d_.data() + i * n_, n_}; }

 private:
  std::size_t n_ = 0;
  std::vector<double> d_;
};

struct ReachabilityOrdering {
  std::vector<std::size_t> order;
  std::vector<double> reachability;   // +inf when never reached
  std::vector<double> core_distance;  // +inf when not a core point
  std::vector<std::optional<std::size_t>> predecessor;
};

// Core distance counts the point itself: the min_samples-th smallest entry of
// its distance row, or +inf when that exceeds max_eps.
std::vector<double> core_distances(const DistanceMatrix& d, double max_eps, std::size_t min_samples);

ReachabilityOrdering compute_ordering(const DistanceMatrix& d, double max_eps,
                                      std::size_t min_samples);
ReachabilityOrdering compute_ordering(const EmbeddingMatrix& x, const OpticsParams& params,
                                      Metric metric);

// Cluster intervals [first, last] over ordering positions, as found by the
// steep-area scan (smaller clusters precede the clusters enclosing them).
struct XiInterval {
  std::size_t first = 0;
  std::size_t last = 0;
  bool operator==(const XiInterval&) const = default;
};
std::vector<XiInterval> xi_intervals(const ReachabilityOrdering& ord, double xi,
                                     std::size_t min_cluster_size);

// Each point goes to the smallest interval containing it; uncovered points are
// outliers. Labels are canonical; ids are the sample indices.
Partition extract_xi_clusters(const ReachabilityOrdering& ord, double xi, std::size_t min_samples);

// Clusters smaller than s_min become outliers; the rest are canonicalized.
Partition filter_small_clusters(Partition p, std::size_t s_min);

Partition cluster(const EmbeddingMatrix& x, const OpticsParams& params, std::size_t s_min,
                  Metric metric);
Partition cluster(const DistanceMatrix& d, const std::vector<std::string>& ids,
                  const OpticsParams& params, std::size_t s_min);

}  // namespace ddce
