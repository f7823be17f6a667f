#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace ddce {

inline constexpr int kOutlier = -1;

// Per-sample cluster labels; kOutlier marks samples assigned to no cluster.
struct Partition {
  std::vector<int> labels;
  std::vector<std::string> ids;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  // Distinct non-outlier labels.
  std::size_t num_clusters() const;
  std::size_t num_outliers() const;

  bool operator==(const Partition&) const = default;
};

// Renumbers non-outlier labels to 0..C-1 in order of first appearance.
Partition canonicalize(Partition p);

// Same grouping up to a renaming of the non-outlier labels, with identical
// outlier sets.
bool same_up_to_relabeling(const Partition& a, const Partition& b);

// Sizes of the non-outlier clusters, indexed by label (labels must be canonical).
std::vector<std::size_t> cluster_sizes(const Partition& p);

// Partition with ids "0".."n-1".
Partition make_partition(std::vector<int> labels);

// JSONL: {"id": str, "cluster": int}
Partition read_partition_jsonl(const std::filesystem::path& path);
void write_partition_jsonl(const std::filesystem::path& path, const Partition& p);
std::string partition_jsonl(const Partition& p);

}  // namespace ddce
