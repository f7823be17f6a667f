#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ddce/corpus.hpp"
#include "ddce/partition.hpp"

namespace ddce {

// Joint label counts of two aligned labelings. Labels are compacted to
// 0..R-1 and 0..C-1 in order of first appearance; kOutlier is an ordinary label.
struct ContingencyTable {
  std::vector<std::vector<std::size_t>> counts;  // R x C
  std::vector<std::size_t> row_totals;
  std::vector<std::size_t> col_totals;
  std::size_t n = 0;

  static ContingencyTable build(std::span<const int> a, std::span<const int> b);

  // True when the table is a permutation matrix on its support, i.e. the two
  // labelings induce the same grouping.
  bool is_bijective() const;
};

// Normalized mutual information, I / sqrt(H(a) H(b)), natural log.
// 1 for identical groupings; 0 when exactly one side is degenerate.
double nmi(std::span<const int> a, std::span<const int> b);
double nmi(const Partition& a, const Partition& b);

// Adjusted Rand index. Requires n >= 2. With a degenerate denominator the
// result is 1 for identical groupings and 0 otherwise.
double ari(std::span<const int> truth, std::span<const int> pred);
double ari(const Partition& truth, const Partition& pred);

// Fraction of true non-outliers that `pred` places in some cluster; 1 when
// there are no true non-outliers.
double nonoutlier_recall(const std::vector<bool>& truth_outlier_flags, const Partition& pred);

struct Scores {
  double score_c = 0.0;
  double score_ari = 0.0;
  double score = 0.0;
  bool operator==(const Scores&) const = default;
};

// Harmonic mean of score_c and max(score_ari, 0); 0 when both terms are 0.
Scores combine_scores(double score_c, double score_ari);

// Scores `pred` against the dataset's ground truth, matched by id. Each intent
// is its own class and all injected outliers share one class.
Scores score(const Dataset& truth, const Partition& pred);

}  // namespace ddce
