#include "ddce/consensus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>

#include "ddce/error.hpp"
#include "ddce/metrics.hpp"
#include "ddce/random.hpp"

namespace ddce {

namespace {

// NMI sums closer than this are treated as ties.
constexpr double kTieTolerance = 1e-12;

Partition with_ids(std::vector<int> labels, const PartitionSet& ts) {
  Partition p;
  p.labels = std::move(labels);
  p.ids = ts.partitions.front().ids;
  return canonicalize(std::move(p));
}

// Every non-outlier cluster of every base partition, as sorted member lists.
struct Hyperedges {
  std::vector<std::vector<std::size_t>> members;
  // edge_of[k][label] -> hyperedge index
  std::vector<std::map<int, std::size_t>> edge_of;
};

Hyperedges collect_hyperedges(const PartitionSet& ts) {
  Hyperedges h;
  h.edge_of.resize(ts.k());
  for (std::size_t k = 0; k < ts.k(); ++k) {
    const auto& labels = ts.partitions[k].labels;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == kOutlier) continue;
      auto [it, fresh] = h.edge_of[k].emplace(labels[i], h.members.size());
      if (fresh) h.members.emplace_back();
      h.members[it->second].push_back(i);
    }
  }
  return h;
}

}  // namespace

void PartitionSet::validate() const {
  if (partitions.empty()) throw DataError("consensus needs at least one base partition");
  if (val_recalls.size() != partitions.size())
    throw LengthMismatchError("expected one validation recall per base partition");
  const auto& ref = partitions.front();
  for (const auto& p : partitions) {
    if (p.size() != ref.size()) throw LengthMismatchError("base partitions differ in length");
    if (p.ids != ref.ids) throw LengthMismatchError("base partitions differ in id order");
    if (p.ids.size() != p.labels.size()) throw LengthMismatchError("partition ids and labels differ");
  }
}

std::size_t k_target(const PartitionSet& ts) {
  if (ts.partitions.empty()) throw DataError("consensus needs at least one base partition");
  std::vector<std::size_t> counts;
  for (const auto& p : ts.partitions) counts.push_back(p.num_clusters());
  std::sort(counts.begin(), counts.end());
  const std::size_t m = counts.size();
  // round-half-up of the median: for an even count, ceil((a + b) / 2)
  const std::size_t med = m % 2 ? counts[m / 2] : (counts[m / 2 - 1] + counts[m / 2] + 1) / 2;
  return std::max<std::size_t>(med, 1);
}

std::vector<double> co_association(const PartitionSet& ts) {
  const std::size_t n = ts.n();
  const double w = 1.0 / static_cast<double>(ts.k());
  std::vector<double> s(n * n, 0.0);
  for (const auto& p : ts.partitions)
    for (std::size_t i = 0; i < n; ++i) {
      if (p.labels[i] == kOutlier) continue;
      for (std::size_t j = 0; j < n; ++j)
        if (p.labels[j] == p.labels[i]) s[i * n + j] += w;
    }
  return s;
}

std::vector<int> average_linkage(const std::vector<double>& dist, std::size_t n, std::size_t k) {
  if (dist.size() != n * n) throw LengthMismatchError("distance matrix size mismatch");
  if (n == 0) return {};
  k = std::clamp<std::size_t>(k, 1, n);
  std::vector<double> d = dist;
  std::vector<std::size_t> size(n, 1);
  std::vector<bool> active(n, true);
  std::vector<std::size_t> root(n);
  for (std::size_t i = 0; i < n; ++i) root[i] = i;

  for (std::size_t clusters = n; clusters > k; --clusters) {
    std::size_t bi = 0, bj = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j)
        if (active[j] && d[i * n + j] < best) {
          best = d[i * n + j];
          bi = i;
          bj = j;
        }
    }
    if (!std::isfinite(best)) {  // only infinite distances left; merge the first pair
      bi = std::find(active.begin(), active.end(), true) - active.begin();
      bj = std::find(active.begin() + static_cast<std::ptrdiff_t>(bi) + 1, active.end(), true) - active.begin();
    }
    const double si = static_cast<double>(size[bi]), sj = static_cast<double>(size[bj]);
    for (std::size_t m = 0; m < n; ++m) {
      if (!active[m] || m == bi || m == bj) continue;
      const double v = (si * d[bi * n + m] + sj * d[bj * n + m]) / (si + sj);
      d[bi * n + m] = v;
      d[m * n + bi] = v;
    }
    size[bi] += size[bj];
    active[bj] = false;
    for (auto& r : root)
      if (r == bj) r = bi;
  }
  Partition p;
  p.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) p.labels[i] = static_cast<int>(root[i]);
  return canonicalize(std::move(p)).labels;
}

Partition cspa(const PartitionSet& ts) {
  ts.validate();
  const std::size_t n = ts.n();
  const auto s = co_association(ts);
  std::vector<std::size_t> active;
  // Only samples that are outliers everywhere stay -1; a singleton cluster
  // keeps its own self-association.
  for (std::size_t i = 0; i < n; ++i)
    if (s[i * n + i] > 0.0) active.push_back(i);
  std::vector<int> labels(n, kOutlier);
  if (!active.empty()) {
    const std::size_t m = active.size();
    std::vector<double> dist(m * m);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b) dist[a * m + b] = a == b ? 0.0 : 1.0 - s[active[a] * n + active[b]];
    auto sub = average_linkage(dist, m, k_target(ts));
    for (std::size_t a = 0; a < m; ++a) labels[active[a]] = sub[a];
  }
  return with_ids(std::move(labels), ts);
}

std::size_t hyperedge_cut(const PartitionSet& ts, const Partition& p) {
  const auto h = collect_hyperedges(ts);
  std::size_t cut = 0;
  for (const auto& e : h.members) {
    for (auto v : e)
      if (p.labels[v] != p.labels[e.front()]) {
        ++cut;
        break;
      }
  }
  return cut;
}

namespace {

// Balanced k-way hypergraph partitioner: random balanced start, then
// best-improvement single moves and pairwise swaps. Moves are ranked by
// (hyperedge cut, pins outside each edge's dominant part), so that progress
// toward uncutting a large edge is visible before the cut itself drops.
class BalancedHypergraphPartitioner {
 public:
  BalancedHypergraphPartitioner(std::vector<std::vector<std::size_t>> edges, std::size_t nv,
                                std::size_t k)
      : edges_(std::move(edges)), nv_(nv), k_(k), vertex_edges_(nv), part_(nv), size_(k, 0),
        cnt_(edges_.size() * k, 0), stamp_(edges_.size(), 0) {
    std::int64_t pins = 0;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      for (auto v : edges_[e]) vertex_edges_[v].push_back(e);
      pins += static_cast<std::int64_t>(edges_[e].size());
    }
    big_ = pins + 1;
    lo_ = nv_ / k_;
    hi_ = (nv_ + k_ - 1) / k_;
  }

  std::vector<std::size_t> run(Rng& rng) {
    std::vector<std::size_t> perm(nv_);
    for (std::size_t i = 0; i < nv_; ++i) perm[i] = i;
    shuffle(perm, rng);
    for (std::size_t i = 0; i < nv_; ++i) assign(perm[i], i % k_);

    std::vector<std::int64_t> single(nv_ * k_);
    for (;;) {
      std::int64_t best = 0;
      std::size_t bu = 0, bv = 0, bp = 0;
      bool is_swap = false, found = false;

      for (std::size_t v = 0; v < nv_; ++v)
        for (std::size_t p = 0; p < k_; ++p) {
          single[v * k_ + p] = p == part_[v] ? 0 : move_delta(v, p);
          if (p == part_[v] || size_[part_[v]] - 1 < lo_ || size_[p] + 1 > hi_) continue;
          if (single[v * k_ + p] < best) {
            best = single[v * k_ + p];
            bu = v;
            bp = p;
            is_swap = false;
            found = true;
          }
        }
      for (std::size_t u = 0; u < nv_; ++u) {
        ++epoch_;
        for (auto e : vertex_edges_[u]) stamp_[e] = epoch_;
        for (std::size_t v = u + 1; v < nv_; ++v) {
          if (part_[u] == part_[v]) continue;
          bool shares = false;
          for (auto e : vertex_edges_[v]) shares = shares || stamp_[e] == epoch_;
          const std::int64_t d = shares ? swap_delta(u, v)
                                        : single[u * k_ + part_[v]] + single[v * k_ + part_[u]];
          if (d < best) {
            best = d;
            bu = u;
            bv = v;
            is_swap = true;
            found = true;
          }
        }
      }
      if (!found) break;
      if (is_swap) {
        const auto pu = part_[bu], pv = part_[bv];
        relocate(bu, pv);
        relocate(bv, pu);
      } else {
        relocate(bu, bp);
      }
    }
    return part_;
  }

 private:
  std::int64_t edge_cost(std::size_t e) const {
    std::size_t parts = 0, top = 0;
    for (std::size_t p = 0; p < k_; ++p) {
      const auto c = cnt_[e * k_ + p];
      parts += c > 0;
      top = std::max(top, c);
    }
    return (parts > 1 ? big_ : 0) + static_cast<std::int64_t>(edges_[e].size() - top);
  }

  void assign(std::size_t v, std::size_t p) {
    part_[v] = p;
    ++size_[p];
    for (auto e : vertex_edges_[v]) ++cnt_[e * k_ + p];
  }

  void relocate(std::size_t v, std::size_t p) {
    const auto from = part_[v];
    --size_[from];
    for (auto e : vertex_edges_[v]) --cnt_[e * k_ + from];
    assign(v, p);
  }

  std::int64_t move_delta(std::size_t v, std::size_t p) {
    const auto from = part_[v];
    std::int64_t before = 0, after = 0;
    for (auto e : vertex_edges_[v]) before += edge_cost(e);
    for (auto e : vertex_edges_[v]) {
      --cnt_[e * k_ + from];
      ++cnt_[e * k_ + p];
    }
    for (auto e : vertex_edges_[v]) after += edge_cost(e);
    for (auto e : vertex_edges_[v]) {
      ++cnt_[e * k_ + from];
      --cnt_[e * k_ + p];
    }
    return after - before;
  }

  std::int64_t swap_delta(std::size_t u, std::size_t v) {
    const auto pu = part_[u], pv = part_[v];
    ++epoch_;
    std::vector<std::size_t> touched;
    for (auto* list : {&vertex_edges_[u], &vertex_edges_[v]})
      for (auto e : *list)
        if (stamp_[e] != epoch_) {
          stamp_[e] = epoch_;
          touched.push_back(e);
        }
    std::int64_t before = 0, after = 0;
    for (auto e : touched) before += edge_cost(e);
    for (auto e : vertex_edges_[u]) --cnt_[e * k_ + pu], ++cnt_[e * k_ + pv];
    for (auto e : vertex_edges_[v]) --cnt_[e * k_ + pv], ++cnt_[e * k_ + pu];
    for (auto e : touched) after += edge_cost(e);
    for (auto e : vertex_edges_[u]) ++cnt_[e * k_ + pu], --cnt_[e * k_ + pv];
    for (auto e : vertex_edges_[v]) ++cnt_[e * k_ + pv], --cnt_[e * k_ + pu];
    // the caller's stamp for u is gone; restore it
    ++epoch_;
    for (auto e : vertex_edges_[u]) stamp_[e] = epoch_;
    return after - before;
  }

  std::vector<std::vector<std::size_t>> edges_;
  std::size_t nv_, k_;
  std::vector<std::vector<std::size_t>> vertex_edges_;
  std::vector<std::size_t> part_, size_;
  std::vector<std::size_t> cnt_;
  std::vector<std::uint64_t> stamp_;
  std::uint64_t epoch_ = 0;
  std::int64_t big_ = 1;
  std::size_t lo_ = 0, hi_ = 0;
};

}  // namespace

Partition hgpa(const PartitionSet& ts, std::uint64_t seed) {
  ts.validate();
  const std::size_t n = ts.n();
  auto h = collect_hyperedges(ts);

  std::vector<std::size_t> local(n, n);
  std::vector<std::size_t> vertices;
  for (const auto& e : h.members)
    for (auto v : e)
      if (local[v] == n) local[v] = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (local[i] == 0) {
      local[i] = vertices.size();
      vertices.push_back(i);
    }

  std::vector<int> labels(n, kOutlier);
  if (vertices.empty()) return with_ids(std::move(labels), ts);
  for (auto& e : h.members)
    for (auto& v : e) v = local[v];

  const std::size_t k = std::min(k_target(ts), vertices.size());
  Rng rng = derive_stream(seed, {0x68677061ull});
  BalancedHypergraphPartitioner part(std::move(h.members), vertices.size(), k);
  auto assignment = part.run(rng);
  for (std::size_t v = 0; v < vertices.size(); ++v) labels[vertices[v]] = static_cast<int>(assignment[v]);
  return with_ids(std::move(labels), ts);
}

Partition mcla(const PartitionSet& ts) {
  ts.validate();
  const std::size_t n = ts.n();
  const auto h = collect_hyperedges(ts);
  const std::size_t m = h.members.size();
  std::vector<int> labels(n, kOutlier);
  if (m == 0) return with_ids(std::move(labels), ts);

  std::vector<double> dist(m * m, 0.0);
  std::vector<std::size_t> common;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b) {
      common.clear();
      std::set_intersection(h.members[a].begin(), h.members[a].end(), h.members[b].begin(),
                            h.members[b].end(), std::back_inserter(common));
      const double inter = static_cast<double>(common.size());
      const double uni = static_cast<double>(h.members[a].size() + h.members[b].size()) - inter;
      dist[a * m + b] = dist[b * m + a] = 1.0 - inter / uni;
    }
  const auto meta = average_linkage(dist, m, k_target(ts));
  const std::size_t n_meta = static_cast<std::size_t>(*std::max_element(meta.begin(), meta.end())) + 1;

  std::vector<std::size_t> assoc(n_meta);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(assoc.begin(), assoc.end(), 0);
    for (std::size_t k = 0; k < ts.k(); ++k) {
      const int l = ts.partitions[k].labels[i];
      if (l != kOutlier) ++assoc[meta[h.edge_of[k].at(l)]];
    }
    const auto best = std::max_element(assoc.begin(), assoc.end());  // first max = lowest id
    if (*best > 0) labels[i] = static_cast<int>(best - assoc.begin());
  }
  return with_ids(std::move(labels), ts);
}

double nmi_sum(const Partition& t, const PartitionSet& ts) {
  double s = 0.0;
  for (const auto& p : ts.partitions) s += nmi(t, p);
  return s;
}

OutlierVote outlier_vote(const PartitionSet& ts) {
  ts.validate();
  OutlierVote v;
  const std::size_t n = ts.n(), K = ts.k();
  v.u.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t votes = 0;
    for (const auto& p : ts.partitions) votes += p.labels[i] == kOutlier;
    v.u[i] = 2 * votes > K;
    (v.u[i] ? v.i_out : v.i_nout).push_back(i);
  }
  return v;
}

std::string to_string(ConsensusFn fn) {
  switch (fn) {
    case ConsensusFn::kChm: return "CHM";
    case ConsensusFn::kBok: return "BOK";
    case ConsensusFn::kBokv: return "BOKV";
  }
  return "?";
}

ConsensusFn parse_consensus_fn(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (s == "CHM") return ConsensusFn::kChm;
  if (s == "BOK") return ConsensusFn::kBok;
  if (s == "BOKV") return ConsensusFn::kBokv;
  throw UsageError("unknown consensus function '" + name + "' (expected CHM, BOK or BOKV)");
}

ConsensusResult chm(const PartitionSet& ts, std::uint64_t seed) {
  ts.validate();
  ConsensusResult r;
  r.fn = ConsensusFn::kChm;
  std::vector<std::pair<std::string, Partition>> candidates;
  candidates.emplace_back("CSPA", cspa(ts));
  candidates.emplace_back("HGPA", hgpa(ts, seed));
  candidates.emplace_back("MCLA", mcla(ts));
  std::size_t best = 0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    r.candidate_scores.emplace_back(candidates[c].first, nmi_sum(candidates[c].second, ts));
    if (r.candidate_scores[c].second > r.candidate_scores[best].second + kTieTolerance) best = c;
  }
  r.chosen = candidates[best].first;
  r.partition = std::move(candidates[best].second);
  return r;
}

namespace {

std::size_t best_of_k(const std::vector<Partition>& parts,
                      std::vector<std::pair<std::string, double>>& scores) {
  scores.clear();
  std::size_t best = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    double s = 0.0;
    for (const auto& other : parts) s += nmi(std::span<const int>(parts[k].labels), std::span<const int>(other.labels));
    scores.emplace_back("model-" + std::to_string(k), s);
    if (s > scores[best].second + kTieTolerance) best = k;
  }
  return best;
}

}  // namespace

ConsensusResult bok(const PartitionSet& ts) {
  ts.validate();
  ConsensusResult r;
  r.fn = ConsensusFn::kBok;
  const auto w = best_of_k(ts.partitions, r.candidate_scores);
  r.winner = w;
  r.chosen = r.candidate_scores[w].first;
  r.partition = ts.partitions[w];
  return r;
}

ConsensusResult bokv(const PartitionSet& ts) {
  ts.validate();
  const std::size_t K = ts.k();
  const auto confident = static_cast<std::size_t>(
      std::count_if(ts.val_recalls.begin(), ts.val_recalls.end(), [](double r) { return r > 0.5; }));
  if (2 * confident <= K) {
    ConsensusResult r = bok(ts);
    r.fn = ConsensusFn::kBokv;
    r.gate = false;
    return r;
  }

  const auto vote = outlier_vote(ts);
  std::vector<Partition> restricted(K);
  for (std::size_t k = 0; k < K; ++k) {
    restricted[k].labels.reserve(vote.i_nout.size());
    for (auto i : vote.i_nout) restricted[k].labels.push_back(ts.partitions[k].labels[i]);
  }
  ConsensusResult r;
  r.fn = ConsensusFn::kBokv;
  r.gate = true;
  r.outlier_votes = vote.i_out.size();
  const auto w = best_of_k(restricted, r.candidate_scores);
  r.winner = w;
  r.chosen = r.candidate_scores[w].first;

  std::vector<int> labels(ts.n(), kOutlier);
  for (auto i : vote.i_nout) labels[i] = ts.partitions[w].labels[i];
  r.partition = with_ids(std::move(labels), ts);
  return r;
}

ConsensusResult apply_consensus(ConsensusFn fn, const PartitionSet& ts, std::uint64_t seed) {
  switch (fn) {
    case ConsensusFn::kChm: return chm(ts, seed);
    case ConsensusFn::kBok: return bok(ts);
    case ConsensusFn::kBokv: return bokv(ts);
  }
  throw UsageError("unknown consensus function");
}

}  // namespace ddce
