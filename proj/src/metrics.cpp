#include "ddce/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "ddce/error.hpp"

namespace ddce {

namespace {

std::vector<std::size_t> compact(std::span<const int> labels, std::size_t& k) {
  std::unordered_map<int, std::size_t> ids;
  std::vector<std::size_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    out[i] = ids.emplace(labels[i], ids.size()).first->second;
  k = ids.size();
  return out;
}

double choose2(std::size_t m) {
  const double x = static_cast<double>(m);
  return x * (x - 1.0) / 2.0;
}

void check_aligned(const Partition& a, const Partition& b) {
  if (a.size() != b.size())
    throw LengthMismatchError("partitions differ in length: " + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()));
  if (!a.ids.empty() && !b.ids.empty() && a.ids != b.ids)
    throw LengthMismatchError("partitions are not aligned by id");
}

}  // namespace

ContingencyTable ContingencyTable::build(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw LengthMismatchError("labelings differ in length");
  std::size_t r = 0, c = 0;
  auto ra = compact(a, r);
  auto cb = compact(b, c);
  ContingencyTable t;
  t.n = a.size();
  t.counts.assign(r, std::vector<std::size_t>(c, 0));
  t.row_totals.assign(r, 0);
  t.col_totals.assign(c, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++t.counts[ra[i]][cb[i]];
    ++t.row_totals[ra[i]];
    ++t.col_totals[cb[i]];
  }
  return t;
}

bool ContingencyTable::is_bijective() const {
  if (row_totals.size() != col_totals.size()) return false;
  for (std::size_t i = 0; i < counts.size(); ++i)
    for (std::size_t j = 0; j < counts[i].size(); ++j)
      if (counts[i][j] != 0 && (counts[i][j] != row_totals[i] || counts[i][j] != col_totals[j]))
        return false;
  return true;
}

double nmi(std::span<const int> a, std::span<const int> b) {
  auto t = ContingencyTable::build(a, b);
  if (t.is_bijective()) return 1.0;
  const double n = static_cast<double>(t.n);
  auto entropy = [n](const std::vector<std::size_t>& totals) {
    double h = 0.0;
    for (auto m : totals)
      if (m) {
        const double p = static_cast<double>(m) / n;
        h -= p * std::log(p);
      }
    return h;
  };
  const double ha = entropy(t.row_totals);
  const double hb = entropy(t.col_totals);
  if (ha <= 0.0 || hb <= 0.0) return 0.0;
  double mi = 0.0;
  for (std::size_t i = 0; i < t.counts.size(); ++i)
    for (std::size_t j = 0; j < t.counts[i].size(); ++j) {
      const auto m = t.counts[i][j];
      if (!m) continue;
      const double nij = static_cast<double>(m);
      mi += nij / n *
            std::log(nij * n / (static_cast<double>(t.row_totals[i]) * static_cast<double>(t.col_totals[j])));
    }
  return std::clamp(mi / std::sqrt(ha * hb), 0.0, 1.0);
}

double nmi(const Partition& a, const Partition& b) {
  check_aligned(a, b);
  return nmi(std::span<const int>(a.labels), std::span<const int>(b.labels));
}

double ari(std::span<const int> truth, std::span<const int> pred) {
  if (truth.size() != pred.size()) throw LengthMismatchError("labelings differ in length");
  if (truth.size() < 2) throw DataError("ARI needs at least 2 samples");
  auto t = ContingencyTable::build(truth, pred);
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& row : t.counts)
    for (auto m : row) index += choose2(m);
  for (auto m : t.row_totals) sum_a += choose2(m);
  for (auto m : t.col_totals) sum_b += choose2(m);
  const double expected = sum_a * sum_b / choose2(t.n);
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return t.is_bijective() ? 1.0 : 0.0;
  return (index - expected) / (max_index - expected);
}

double ari(const Partition& truth, const Partition& pred) {
  check_aligned(truth, pred);
  return ari(std::span<const int>(truth.labels), std::span<const int>(pred.labels));
}

double nonoutlier_recall(const std::vector<bool>& truth_outlier_flags, const Partition& pred) {
  if (truth_outlier_flags.size() != pred.size())
    throw LengthMismatchError("outlier flags and partition differ in length");
  std::size_t inliers = 0, kept = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (truth_outlier_flags[i]) continue;
    ++inliers;
    kept += pred.labels[i] != kOutlier;
  }
  if (inliers == 0) return 1.0;
  return static_cast<double>(kept) / static_cast<double>(inliers);
}

Scores combine_scores(double score_c, double score_ari) {
  Scores s{score_c, score_ari, 0.0};
  const double a = score_c, b = std::max(score_ari, 0.0);
  s.score = a + b > 0.0 ? 2.0 * a * b / (a + b) : 0.0;
  return s;
}

Scores score(const Dataset& truth, const Partition& pred) {
  std::unordered_map<std::string, std::size_t> row_of;
  row_of.reserve(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) row_of.emplace(truth.rows[i].id, i);
  if (pred.ids.size() != pred.labels.size())
    throw LengthMismatchError("partition ids and labels differ in length");
  if (pred.size() != truth.size())
    throw LengthMismatchError("partition has " + std::to_string(pred.size()) + " rows, ground truth has " +
                              std::to_string(truth.size()));

  std::map<std::string, int> intent_label;
  const int outlier_class = -1;
  std::vector<int> truth_labels(pred.size());
  std::vector<bool> flags(pred.size());
  for (std::size_t k = 0; k < pred.size(); ++k) {
    auto it = row_of.find(pred.ids[k]);
    if (it == row_of.end()) throw DataError("no ground truth for id '" + pred.ids[k] + "'");
    const auto& u = truth.rows[it->second];
    if (u.is_injected_outlier) {
      truth_labels[k] = outlier_class;
      flags[k] = true;
    } else if (u.intent) {
      truth_labels[k] = intent_label.emplace(*u.intent, static_cast<int>(intent_label.size())).first->second;
    } else {
      throw DataError("row '" + u.id + "' has neither an intent nor an outlier flag");
    }
  }
  const double c = nonoutlier_recall(flags, pred);
  // Fewer than two samples have no pairs to disagree on.
  const double a =
      pred.size() >= 2 ? ari(std::span<const int>(truth_labels), std::span<const int>(pred.labels)) : 1.0;
  return combine_scores(c, a);
}

}  // namespace ddce
