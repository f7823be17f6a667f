#include "ddce/search.hpp"

#include <cmath>
#include <limits>

#include "ddce/error.hpp"
#include "ddce/io.hpp"

namespace ddce {

namespace {

double sample_real(std::pair<double, double> range, Rng& rng) {
  if (range.first == range.second) return range.first;
  return uniform_open(rng, range.first, range.second);
}

bool valid_real_range(std::pair<double, double> r, double lo_bound, double hi_bound) {
  auto [lo, hi] = r;
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) return false;
  if (lo < lo_bound || hi > hi_bound) return false;
  if (lo == hi) return lo > lo_bound && hi < hi_bound;
  return true;
}

}  // namespace

void SearchSpace::validate() const {
  if (!valid_real_range(max_eps_range, 0.0, std::numeric_limits<double>::max()))
    throw UsageError("max_eps_range must be a non-empty interval within (0, inf)");
  if (!valid_real_range(xi_range, 0.0, 1.0))
    throw UsageError("xi_range must be a non-empty interval within (0, 1)");
  if (min_samples_range.first < 2 || min_samples_range.first > min_samples_range.second)
    throw UsageError("min_samples_range must satisfy 2 <= lo <= hi");
}

OpticsParams sample_params(const SearchSpace& space, Rng& rng) {
  OpticsParams p;
  p.max_eps = sample_real(space.max_eps_range, rng);
  p.xi = sample_real(space.xi_range, rng);
  p.min_samples = static_cast<std::size_t>(
      uniform_int(rng, static_cast<std::int64_t>(space.min_samples_range.first),
                  static_cast<std::int64_t>(space.min_samples_range.second)));
  return p;
}

OpticsParams trial_params(const SearchSpace& space, std::uint64_t seed, std::size_t index) {
  Rng rng = derive_stream(seed, {0x747269616cull, index});
  return sample_params(space, rng);
}

SearchResult random_search(const EmbeddingMatrix& e_hs, const Dataset& truth,
                           const SearchSpace& space, std::size_t s_min, Metric metric, Rng& rng) {
  space.validate();
  if (space.n_trials == 0) throw UsageError("random search needs at least one trial");
  if (e_hs.rows() != truth.size()) throw LengthMismatchError("embeddings and dataset differ in length");
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (e_hs.ids()[i] != truth.rows[i].id)
      throw LengthMismatchError("embedding row " + std::to_string(i) + " is '" + e_hs.ids()[i] +
                                "', dataset row is '" + truth.rows[i].id + "'");

  const std::uint64_t seed = next_seed(rng);
  const DistanceMatrix dist(e_hs, metric);
  SearchResult result;
  result.trials.reserve(space.n_trials);
  for (std::size_t t = 0; t < space.n_trials; ++t) {
    Trial trial;
    trial.params = trial_params(space, seed, t);
    trial.scores = score(truth, cluster(dist, e_hs.ids(), trial.params, s_min));
    if (t == 0 || trial.scores.score > result.best_scores.score) {
      result.best_params = trial.params;
      result.best_scores = trial.scores;
      result.best_trial = t;
    }
    result.trials.push_back(trial);
  }
  return result;
}

std::string trial_log_csv(const SearchResult& result) {
  std::string out = "trial_idx,max_eps,xi,min_samples,score_c,score_ari,score\n";
  for (std::size_t t = 0; t < result.trials.size(); ++t) {
    const auto& tr = result.trials[t];
    out += std::to_string(t) + ',' + format_double(tr.params.max_eps) + ',' +
           format_double(tr.params.xi) + ',' + std::to_string(tr.params.min_samples) + ',' +
           format_double(tr.scores.score_c) + ',' + format_double(tr.scores.score_ari) + ',' +
           format_double(tr.scores.score) + '\n';
  }
  return out;
}

}  // namespace ddce
