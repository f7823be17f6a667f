#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ddce/partition.hpp"

namespace ddce {

// K aligned base partitions plus each base model's validation non-outlier
// recall (score_c).
struct PartitionSet {
  std::vector<Partition> partitions;
  std::vector<double> val_recalls;

  std::size_t k() const { return partitions.size(); }
  std::size_t n() const { return partitions.empty() ? 0 : partitions.front().size(); }
  // Throws unless K >= 1, all partitions share length and id order, and
  // there is one recall per partition.
  void validate() const;
};

// Median of the per-partition cluster counts, half rounded up, at least 1.
std::size_t k_target(const PartitionSet& ts);

// S_ij = fraction of partitions placing i and j in the same non-outlier
// cluster. Row-major n x n.
std::vector<double> co_association(const PartitionSet& ts);

// Average-linkage agglomeration of a symmetric n x n distance matrix down to
// k clusters. Closest pair first, lowest (i, j) on ties. Labels canonical.
std::vector<int> average_linkage(const std::vector<double>& dist, std::size_t n, std::size_t k);

Partition cspa(const PartitionSet& ts);

// Number of base clusters (hyperedges) whose members span several parts of `p`.
std::size_t hyperedge_cut(const PartitionSet& ts, const Partition& p);

inline constexpr std::uint64_t kDefaultHgpaSeed = 0x68677061ull;
Partition hgpa(const PartitionSet& ts, std::uint64_t seed = kDefaultHgpaSeed);

Partition mcla(const PartitionSet& ts);

// Sum over base partitions of NMI(t, T_j).
double nmi_sum(const Partition& t, const PartitionSet& ts);

struct OutlierVote {
  std::vector<bool> u;  // strict majority of models say outlier
  std::vector<std::size_t> i_out;
  std::vector<std::size_t> i_nout;
};

OutlierVote outlier_vote(const PartitionSet& ts);

enum class ConsensusFn { kChm, kBok, kBokv };

std::string to_string(ConsensusFn fn);
ConsensusFn parse_consensus_fn(const std::string& s);

struct ConsensusResult {
  Partition partition;
  ConsensusFn fn = ConsensusFn::kBok;
  // Candidate name ("CSPA", "model-0", ...) and its NMI sum.
  std::vector<std::pair<std::string, double>> candidate_scores;
  std::string chosen;
  std::optional<std::size_t> winner;  // base model index for BOK / BOKV
  std::optional<bool> gate;           // BOKV recall gate
  std::size_t outlier_votes = 0;      // |I_out| when the BOKV gate is open
};

ConsensusResult chm(const PartitionSet& ts, std::uint64_t seed = kDefaultHgpaSeed);
ConsensusResult bok(const PartitionSet& ts);
ConsensusResult bokv(const PartitionSet& ts);

ConsensusResult apply_consensus(ConsensusFn fn, const PartitionSet& ts,
                                std::uint64_t seed = kDefaultHgpaSeed);

}  // namespace ddce
