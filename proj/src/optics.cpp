#include "ddce/optics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "ddce/error.hpp"

namespace ddce {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string to_string(Metric m) { return m == Metric::kCosine ? "cosine" : "euclidean"; }

Metric parse_metric(const std::string& s) {
  if (s == "cosine") return Metric::kCosine;
  if (s == "euclidean") return Metric::kEuclidean;
  throw UsageError("unknown metric '" + s + "' (expected cosine or euclidean)");
}

void OpticsParams::validate() const {
  if (!(std::isfinite(max_eps) && max_eps > 0.0)) throw UsageError("max_eps must be > 0");
  if (!(std::isfinite(xi) && xi > 0.0 && xi < 1.0)) throw UsageError("xi must lie in (0, 1)");
  if (min_samples < 2) throw UsageError("min_samples must be >= 2");
}

double distance(std::span<const double> a, std::span<const double> b, Metric metric) {
  if (metric == Metric::kEuclidean) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double d = a[k] - b[k];
      s += d * d;
    }
    return std::sqrt(s);
  }
  double na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  na = na > 0.0 ? 1.0 / std::sqrt(na) : 0.0;
  nb = nb > 0.0 ? 1.0 / std::sqrt(nb) : 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] * na - b[k] * nb;
    s += d * d;
  }
  return 0.5 * s;
}

DistanceMatrix::DistanceMatrix(const EmbeddingMatrix& x, Metric metric)
    : n_(x.rows()), d_(x.rows() * x.rows(), 0.0) {
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j) {
      const double v = distance(x.row(i), x.row(j), metric);
      d_[i * n_ + j] = v;
      d_[j * n_ + i] = v;
    }
}

std::vector<double> core_distances(const DistanceMatrix& d, double max_eps,
                                   std::size_t min_samples) {
  const std::size_t n = d.size();
  std::vector<double> core(n, kInf);
  if (min_samples == 0 || n < min_samples) return core;
  std::vector<double> buf(n);
  for (std::size_t p = 0; p < n; ++p) {
    auto row = d.row(p);
    std::copy(row.begin(), row.end(), buf.begin());
    std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(min_samples - 1), buf.end());
    const double c = buf[min_samples - 1];
    if (c <= max_eps) core[p] = c;
  }
  return core;
}

ReachabilityOrdering compute_ordering(const DistanceMatrix& d, double max_eps,
                                      std::size_t min_samples) {
  const std::size_t n = d.size();
  ReachabilityOrdering out;
  out.core_distance = core_distances(d, max_eps, min_samples);
  out.reachability.assign(n, kInf);
  out.predecessor.assign(n, std::nullopt);
  out.order.reserve(n);

  std::vector<bool> processed(n, false);
  // (reachability, index): the set order is the deterministic tie-break.
  std::set<std::pair<double, std::size_t>> seeds;

  auto expand_from = [&](std::size_t p) {
    processed[p] = true;
    out.order.push_back(p);
    const double core = out.core_distance[p];
    if (!std::isfinite(core)) return;
    auto row = d.row(p);
    for (std::size_t q = 0; q < n; ++q) {
      if (processed[q] || row[q] > max_eps) continue;
      const double reach = std::max(core, row[q]);
      if (reach < out.reachability[q]) {
        if (std::isfinite(out.reachability[q])) seeds.erase({out.reachability[q], q});
        out.reachability[q] = reach;
        out.predecessor[q] = p;
        seeds.emplace(reach, q);
      }
    }
  };

  for (std::size_t start = 0; start < n; ++start) {
    if (processed[start]) continue;
    expand_from(start);
    while (!seeds.empty()) {
      auto next = seeds.begin()->second;
      seeds.erase(seeds.begin());
      expand_from(next);
    }
  }
  return out;
}

ReachabilityOrdering compute_ordering(const EmbeddingMatrix& x, const OpticsParams& params,
                                      Metric metric) {
  params.validate();
  return compute_ordering(DistanceMatrix(x, metric), params.max_eps, params.min_samples);
}

namespace {

// Extends a steep area starting at `start`: it may absorb at most
// `min_samples` consecutive points that are neither steep nor reversing.
std::size_t extend_region(const std::vector<bool>& steep, const std::vector<bool>& reversing,
                          std::size_t start, std::size_t min_samples) {
  const std::size_t n = steep.size();
  std::size_t non_steep = 0;
  std::size_t end = start;
  for (std::size_t i = start; i < n; ++i) {
    if (steep[i]) {
      non_steep = 0;
      end = i;
    } else if (!reversing[i]) {
      if (++non_steep > min_samples) break;
    } else {
      return end;
    }
  }
  return end;
}

struct SteepDownArea {
  std::size_t start;
  std::size_t end;
  double mib;
};

void filter_down_areas(std::vector<SteepDownArea>& sdas, double mib, double xi_complement,
                       const std::vector<double>& r) {
  if (std::isinf(mib)) {
    sdas.clear();
    return;
  }
  std::erase_if(sdas, [&](const SteepDownArea& a) { return !(mib <= r[a.start] * xi_complement); });
  for (auto& a : sdas) a.mib = std::max(a.mib, mib);
}

// Trims the cluster end until its predecessor lies inside the cluster.
std::optional<std::pair<std::size_t, std::size_t>> correct_predecessor(
    const std::vector<double>& r, const std::vector<std::optional<std::size_t>>& pred_plot,
    const std::vector<std::size_t>& order, std::size_t s, std::size_t e) {
  while (s < e) {
    if (r[s] > r[e]) return std::make_pair(s, e);
    const auto p = pred_plot[e];
    if (p)
      for (std::size_t i = s; i < e; ++i)
        if (order[i] == *p) return std::make_pair(s, e);
    --e;
  }
  return std::nullopt;
}

}  // namespace

std::vector<XiInterval> xi_intervals(const ReachabilityOrdering& ord, double xi,
                                     std::size_t min_cluster_size) {
  const std::size_t n = ord.order.size();
  std::vector<XiInterval> clusters;
  if (n == 0) return clusters;

  // Reachability plot in ordering position, with a trailing +inf so a cluster
  // can close at the very end of the plot.
  std::vector<double> r(n + 1);
  std::vector<std::optional<std::size_t>> pred_plot(n);
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = ord.reachability[ord.order[i]];
    pred_plot[i] = ord.predecessor[ord.order[i]];
  }
  r[n] = kInf;

  const double xc = 1.0 - xi;
  std::vector<bool> steep_up(n), steep_down(n), down(n), up(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ratio = r[i] / r[i + 1];  // NaN for inf/inf and 0/0: no flags
    steep_up[i] = ratio <= xc;
    steep_down[i] = ratio >= 1.0 / xc;
    down[i] = ratio > 1.0;
    up[i] = ratio < 1.0;
  }

  std::vector<SteepDownArea> sdas;
  std::size_t index = 0;
  double mib = 0.0;
  for (std::size_t steep_index = 0; steep_index < n; ++steep_index) {
    if (!(steep_up[steep_index] || steep_down[steep_index])) continue;
    if (steep_index < index) continue;
    mib = std::max(mib, *std::max_element(r.begin() + static_cast<std::ptrdiff_t>(index),
                                          r.begin() + static_cast<std::ptrdiff_t>(steep_index + 1)));
    if (steep_down[steep_index]) {
      filter_down_areas(sdas, mib, xc, r);
      const std::size_t d_end = extend_region(steep_down, up, steep_index, min_cluster_size);
      sdas.push_back({steep_index, d_end, 0.0});
      index = d_end + 1;
      mib = r[index];
      continue;
    }

    filter_down_areas(sdas, mib, xc, r);
    const std::size_t u_start = steep_index;
    const std::size_t u_end = extend_region(steep_up, down, u_start, min_cluster_size);
    index = u_end + 1;
    mib = r[index];

    std::vector<XiInterval> found;
    for (const auto& sda : sdas) {
      std::size_t c_start = sda.start;
      std::size_t c_end = u_end;
      if (r[c_end + 1] * xc < sda.mib) continue;

      const double d_max = r[sda.start];
      if (d_max * xc >= r[c_end + 1]) {
        while (r[c_start + 1] > r[c_end + 1] && c_start < sda.end) ++c_start;
      } else if (r[c_end + 1] * xc >= d_max) {
        while (r[c_end - 1] > d_max && c_end > u_start) --c_end;
      }

      auto corrected = correct_predecessor(r, pred_plot, ord.order, c_start, c_end);
      if (!corrected) continue;
      std::tie(c_start, c_end) = *corrected;

      if (c_end - c_start + 1 < min_cluster_size) continue;
      if (c_start > sda.end) continue;
      if (c_end < u_start) continue;
      found.push_back({c_start, c_end});
    }
    clusters.insert(clusters.end(), found.rbegin(), found.rend());
  }
  return clusters;
}

Partition extract_xi_clusters(const ReachabilityOrdering& ord, double xi, std::size_t min_samples) {
  if (!(xi > 0.0 && xi < 1.0)) throw UsageError("xi must lie in (0, 1)");
  const std::size_t n = ord.order.size();
  auto intervals = xi_intervals(ord, xi, min_samples);

  std::vector<std::size_t> by_size(intervals.size());
  for (std::size_t k = 0; k < by_size.size(); ++k) by_size[k] = k;
  std::stable_sort(by_size.begin(), by_size.end(), [&](std::size_t a, std::size_t b) {
    return intervals[a].last - intervals[a].first < intervals[b].last - intervals[b].first;
  });

  std::vector<int> at_position(n, kOutlier);
  for (std::size_t rank = 0; rank < by_size.size(); ++rank) {
    const auto& iv = intervals[by_size[rank]];
    for (std::size_t i = iv.first; i <= iv.last; ++i)
      if (at_position[i] == kOutlier) at_position[i] = static_cast<int>(rank);
  }
  std::vector<int> labels(n, kOutlier);
  for (std::size_t i = 0; i < n; ++i) labels[ord.order[i]] = at_position[i];
  return canonicalize(make_partition(std::move(labels)));
}

Partition filter_small_clusters(Partition p, std::size_t s_min) {
  if (s_min < 1) throw UsageError("s_min must be >= 1");
  p = canonicalize(std::move(p));
  const auto sizes = cluster_sizes(p);
  for (int& l : p.labels)
    if (l != kOutlier && sizes[l] < s_min) l = kOutlier;
  return canonicalize(std::move(p));
}

Partition cluster(const DistanceMatrix& d, const std::vector<std::string>& ids,
                  const OpticsParams& params, std::size_t s_min) {
  params.validate();
  if (ids.size() != d.size()) throw LengthMismatchError("id count differs from matrix size");
  auto ord = compute_ordering(d, params.max_eps, params.min_samples);
  auto p = filter_small_clusters(extract_xi_clusters(ord, params.xi, params.min_samples), s_min);
  p.ids = ids;
  return p;
}

Partition cluster(const EmbeddingMatrix& x, const OpticsParams& params, std::size_t s_min,
                  Metric metric) {
  params.validate();
  return cluster(DistanceMatrix(x, metric), x.ids(), params, s_min);
}

}  // namespace ddce
