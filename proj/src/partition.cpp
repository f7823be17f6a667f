#include "ddce/partition.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "ddce/error.hpp"
#include "ddce/io.hpp"

namespace ddce {

std::size_t Partition::num_clusters() const {
  std::set<int> s;
  for (int l : labels)
    if (l != kOutlier) s.insert(l);
  return s.size();
}

std::size_t Partition::num_outliers() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kOutlier));
}

Partition canonicalize(Partition p) {
  std::unordered_map<int, int> remap;
  for (int& l : p.labels) {
    if (l == kOutlier) continue;
    if (l < kOutlier) throw DataError("negative cluster label " + std::to_string(l));
    auto [it, fresh] = remap.emplace(l, static_cast<int>(remap.size()));
    l = it->second;
  }
  return p;
}

bool same_up_to_relabeling(const Partition& a, const Partition& b) {
  if (a.size() != b.size()) return false;
  return canonicalize(Partition{a.labels, {}}).labels == canonicalize(Partition{b.labels, {}}).labels;
}

std::vector<std::size_t> cluster_sizes(const Partition& p) {
  std::vector<std::size_t> sizes;
  for (int l : p.labels) {
    if (l == kOutlier) continue;
    if (static_cast<std::size_t>(l) >= sizes.size()) sizes.resize(l + 1, 0);
    ++sizes[l];
  }
  return sizes;
}

Partition make_partition(std::vector<int> labels) {
  Partition p;
  p.ids.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) p.ids.push_back(std::to_string(i));
  p.labels = std::move(labels);
  return p;
}

std::string partition_jsonl(const Partition& p) {
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    nlohmann::json j;
    j["id"] = p.ids[i];
    j["cluster"] = p.labels[i];
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_partition_jsonl(const std::filesystem::path& path, const Partition& p) {
  write_file_atomic(path, partition_jsonl(p));
}

Partition read_partition_jsonl(const std::filesystem::path& path) {
  Partition p;
  std::unordered_set<std::string> seen;
  auto lines = split_lines(read_text_file(path));
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[ln]);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(path.string() + ":" + std::to_string(ln + 1) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("cluster") ||
        !j["cluster"].is_number_integer())
      throw DataError(path.string() + ":" + std::to_string(ln + 1) + ": expected id and integer cluster");
    auto id = j["id"].get<std::string>();
    if (!seen.insert(id).second) throw DataError("duplicate id in partition: " + id);
    int label = j["cluster"].get<int>();
    if (label < kOutlier) throw DataError("invalid cluster label " + std::to_string(label));
    p.ids.push_back(std::move(id));
    p.labels.push_back(label);
  }
  return p;
}

}  // namespace ddce
