#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ddce/corpus.hpp"
#include "ddce/embedding.hpp"
#include "ddce/metrics.hpp"
#include "ddce/optics.hpp"
#include "ddce/random.hpp"

namespace ddce {

// Real ranges are open intervals; lo == hi pins the value. The integer range
// is inclusive.
struct SearchSpace {
  std::pair<double, double> max_eps_range{0.0, 0.5};
  std::pair<double, double> xi_range{0.0, 0.5};
  std::pair<std::size_t, std::size_t> min_samples_range{2, 20};
  std::size_t n_trials = 100;

  void validate() const;
  bool operator==(const SearchSpace&) const = default;
};

struct Trial {
  OpticsParams params;
  Scores scores;
};

struct SearchResult {
  OpticsParams best_params;
  Scores best_scores;
  std::size_t best_trial = 0;
  std::vector<Trial> trials;
};

OpticsParams sample_params(const SearchSpace& space, Rng& rng);

// The parameters of trial `index` under `seed`; independent of other trials.
OpticsParams trial_params(const SearchSpace& space, std::uint64_t seed, std::size_t index);

// Random search over `space`, scoring each OPTICS run against `truth`
// (which should contain injected outliers). `e_hs` rows must follow truth's
// row order. Best is the highest score, earliest trial on ties.
SearchResult random_search(const EmbeddingMatrix& e_hs, const Dataset& truth,
                           const SearchSpace& space, std::size_t s_min, Metric metric, Rng& rng);

// trial_idx,max_eps,xi,min_samples,score_c,score_ari,score
std::string trial_log_csv(const SearchResult& result);

}  // namespace ddce
