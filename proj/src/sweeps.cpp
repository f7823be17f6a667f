#include "ddce/sweeps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ddce/error.hpp"
#include "ddce/io.hpp"

namespace ddce {

namespace {

enum : std::uint64_t {
  kStreamBenchmark = 101,
  kStreamTestSet,
  kStreamRep,
  kStreamSubset,
};

Dataset strip_to_dataset(const LabeledDataset& d) { return d.as_dataset(); }

}  // namespace

Benchmark make_benchmark(const BenchmarkSpec& spec, std::uint64_t seed) {
  if (spec.labeled_intents < 2) throw UsageError("benchmark needs at least 2 labeled intents");
  if (spec.novel_intents < 1) throw UsageError("benchmark needs at least 1 novel intent");
  Rng rng = derive_stream(seed, {kStreamBenchmark});

  SyntheticSpec s = spec.shape;
  s.n_intents = spec.labeled_intents + spec.novel_intents;
  s.rows_per_intent = spec.rows_per_intent;
  s.prefix = "syn";
  auto all = generate_synthetic(s, rng);

  // Intents are generated in index order; the last novel_intents are held back.
  std::vector<std::string> labeled, novel;
  for (std::size_t c = 0; c < s.n_intents; ++c)
    (c < spec.labeled_intents ? labeled : novel).push_back("syn-intent-" + std::to_string(c));

  Benchmark b;
  b.d_l = all.labeled.restrict_to(labeled);
  b.d_ul_clean = strip_to_dataset(all.labeled.restrict_to(novel));

  const std::size_t n_val = static_cast<std::size_t>(
      std::ceil(spec.max_val_outlier_ratio * static_cast<double>(b.d_l.size()))) + 1;
  const std::size_t n_test = static_cast<std::size_t>(
      std::ceil(spec.max_test_outlier_ratio * static_cast<double>(b.d_ul_clean.size()))) + 1;
  // Isolated outliers: one row per foreign pseudo-intent.
  SyntheticSpec vs = spec.shape;
  vs.rows_per_intent = 1;
  vs.blob_sigma = 0.0;
  vs.prefix = "valout";
  auto [val, val_emb] = generate_outlier_pool(n_val, vs, rng);
  SyntheticSpec ts = vs;
  ts.prefix = "testout";
  auto [test, test_emb] = generate_outlier_pool(n_test, ts, rng);
  b.val_outliers = std::move(val);
  b.test_outliers = std::move(test);
  b.oracle = vstack(vstack(all.oracle, val_emb), test_emb);
  return b;
}

Dataset test_set(const Benchmark& b, double ratio, std::uint64_t seed) {
  Rng rng = derive_stream(seed, {kStreamTestSet});
  return inject_outliers(b.d_ul_clean, b.test_outliers, ratio, rng);
}

Benchmark BenchmarkSource::get(std::uint64_t seed, std::optional<std::size_t> labeled_intents) const {
  if (synthetic) {
    BenchmarkSpec spec = *synthetic;
    if (labeled_intents) spec.labeled_intents = *labeled_intents;
    return make_benchmark(spec, seed);
  }
  if (!fixed) throw UsageError("benchmark source has no data");
  Benchmark b = *fixed;
  if (labeled_intents) {
    const auto& intents = b.d_l.intents();
    if (*labeled_intents > intents.size())
      throw DataError("requested " + std::to_string(*labeled_intents) + " labeled intents, data has " +
                      std::to_string(intents.size()));
    Rng rng = derive_stream(seed, {kStreamSubset});
    std::vector<std::string> keep;
    for (auto i : sample_without_replacement(intents.size(), *labeled_intents, rng)) keep.push_back(intents[i]);
    b.d_l = b.d_l.restrict_to(keep);
  }
  return b;
}

const EmbeddingMatrix* BenchmarkSource::embeddings(const Benchmark& b) const {
  if (precomputed) return &*precomputed;
  if (synthetic && use_oracle_embeddings) return &b.oracle;
  return nullptr;
}

EnsembleRun run_benchmark(const Benchmark& b, const PipelineConfig& cfg, double test_ratio,
                          const EmbeddingMatrix* precomputed) {
  const auto d_ul = test_set(b, test_ratio, cfg.master_seed);
  auto r = run_ddce(b.d_l, d_ul, b.val_outliers, cfg, precomputed);
  return {r.consensus_scores->score, r.base_mean_score()};
}

std::vector<AlphaRow> sweep_alpha(const std::vector<double>& alphas, std::size_t reps,
                                  const PipelineConfig& base, const BenchmarkSource& source,
                                  double test_ratio) {
  if (reps < 1) throw UsageError("reps must be >= 1");
  std::vector<AlphaRow> rows;
  for (double alpha : alphas) {
    std::vector<double> scores;
    for (std::size_t r = 0; r < reps; ++r) {
      PipelineConfig cfg = base;
      cfg.alpha = alpha;
      cfg.k_models = 1;
      Rng rep = derive_stream(base.master_seed, {kStreamRep, r});
      cfg.master_seed = next_seed(rep);
      const auto b = source.get(cfg.master_seed);
      scores.push_back(run_benchmark(b, cfg, test_ratio, source.embeddings(b)).base_mean_score);
    }
    const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(reps);
    double var = 0.0;
    for (double s : scores) var += (s - mean) * (s - mean);
    var = reps > 1 ? var / static_cast<double>(reps - 1) : 0.0;
    rows.push_back({alpha, mean, var});
  }
  return rows;
}

std::vector<OutlierRow> outlier_ratio_curve(const std::vector<double>& ratios, const PipelineConfig& base,
                                            const Benchmark& b, const EmbeddingMatrix* precomputed) {
  PipelineConfig cfg = base;
  cfg.consensus_fn = ConsensusFn::kBokv;
  const auto labeled = prepare_labeled(b.d_l, cfg);
  const auto artifacts = train_base_models(labeled, b.val_outliers, cfg, precomputed);
  std::vector<OutlierRow> rows;
  for (double ratio : ratios) {
    const auto d_ul = test_set(b, ratio, cfg.master_seed);
    auto r = run_inference(d_ul, artifacts, cfg, precomputed);
    rows.push_back({ratio, r.consensus_scores->score, r.base_mean_score()});
  }
  return rows;
}

std::vector<OutlierRow> sweep_outlier_ratio(const std::vector<double>& ratios, const PipelineConfig& cfg,
                                            const BenchmarkSource& source, std::size_t reps) {
  if (reps < 1) throw UsageError("reps must be >= 1");
  std::vector<OutlierRow> acc(ratios.size());
  for (std::size_t r = 0; r < reps; ++r) {
    PipelineConfig c = cfg;
    if (reps > 1) {
      Rng rep = derive_stream(cfg.master_seed, {kStreamRep, r});
      c.master_seed = next_seed(rep);
    }
    const auto b = source.get(c.master_seed);
    auto rows = outlier_ratio_curve(ratios, c, b, source.embeddings(b));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      acc[i].ratio = rows[i].ratio;
      acc[i].bokv_score += rows[i].bokv_score / static_cast<double>(reps);
      acc[i].base_mean_score += rows[i].base_mean_score / static_cast<double>(reps);
    }
  }
  return acc;
}

double relative_improvement(double ensemble, double base) {
  if (base == 0.0) return ensemble == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return (ensemble - base) / base;
}

double median(std::vector<double> v) {
  if (v.empty()) throw DataError("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

std::vector<SizeRow> sweep_training_size(const std::vector<std::size_t>& o_values, std::size_t reps,
                                         const PipelineConfig& cfg, const BenchmarkSource& source,
                                         double test_ratio) {
  if (reps < 1) throw UsageError("reps must be >= 1");
  std::vector<SizeRow> rows;
  for (auto o : o_values) {
    SizeRow row;
    row.o = o;
    std::vector<double> ens, base, rel;
    for (std::size_t r = 0; r < reps; ++r) {
      PipelineConfig c = cfg;
      c.consensus_fn = ConsensusFn::kBokv;
      Rng rep = derive_stream(cfg.master_seed, {kStreamRep, r});
      c.master_seed = next_seed(rep);
      const auto b = source.get(c.master_seed, o);
      auto run = run_benchmark(b, c, test_ratio, source.embeddings(b));
      row.runs.push_back(run);
      ens.push_back(run.ensemble_score);
      base.push_back(run.base_mean_score);
      rel.push_back(relative_improvement(run.ensemble_score, run.base_mean_score));
    }
    const double me = std::accumulate(ens.begin(), ens.end(), 0.0) / static_cast<double>(reps);
    const double mb = std::accumulate(base.begin(), base.end(), 0.0) / static_cast<double>(reps);
    row.improvement = relative_improvement(me, mb);
    row.median_improvement = median(rel);
    row.p_value = wilcoxon_signed_rank(ens, base);
    rows.push_back(std::move(row));
  }
  return rows;
}

double wilcoxon_signed_rank(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw LengthMismatchError("paired samples differ in length");
  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] - y[i] != 0.0) d.push_back(x[i] - y[i]);
  const std::size_t n = d.size();
  if (n == 0) return 1.0;

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });
  // Doubled average ranks stay integral.
  std::vector<std::size_t> rank2(n);
  std::vector<std::size_t> tie_sizes;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(d[idx[j + 1]]) == std::abs(d[idx[i]])) ++j;
    for (std::size_t k = i; k <= j; ++k) rank2[idx[k]] = i + j + 2;  // 2 * mean(i+1 .. j+1)
    tie_sizes.push_back(j - i + 1);
    i = j + 1;
  }
  std::size_t w2 = 0, total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total2 += rank2[i];
    if (d[i] > 0) w2 += rank2[i];
  }

  if (n <= 25) {
    std::vector<double> count(total2 + 1, 0.0);
    count[0] = 1.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t s = total2; s + 1 > rank2[i]; --s) count[s] += count[s - rank2[i]];
    const double all = std::ldexp(1.0, static_cast<int>(n));
    double lower = 0.0, upper = 0.0;
    for (std::size_t s = 0; s <= total2; ++s) {
      if (s <= w2) lower += count[s];
      if (s >= w2) upper += count[s];
    }
    return std::min(1.0, 2.0 * std::min(lower, upper) / all);
  }

  const double nn = static_cast<double>(n);
  const double w = static_cast<double>(w2) / 2.0;
  const double mean = nn * (nn + 1.0) / 4.0;
  double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
  for (auto t : tie_sizes) {
    const double tt = static_cast<double>(t);
    var -= (tt * tt * tt - tt) / 48.0;
  }
  if (var <= 0.0) return 1.0;
  const double z = (std::abs(w - mean) - 0.5) / std::sqrt(var);
  return std::min(1.0, std::erfc(std::max(z, 0.0) / std::sqrt(2.0)));
}

std::string alpha_csv(const std::vector<AlphaRow>& rows) {
  std::string out = "alpha,mean_score,variance\n";
  for (const auto& r : rows)
    out += format_double(r.alpha) + ',' + format_double(r.mean_score) + ',' + format_double(r.variance) + '\n';
  return out;
}

std::string outlier_csv(const std::vector<OutlierRow>& rows) {
  std::string out = "ratio,bokv_score,base_mean_score\n";
  for (const auto& r : rows)
    out += format_double(r.ratio) + ',' + format_double(r.bokv_score) + ',' + format_double(r.base_mean_score) + '\n';
  return out;
}

std::string size_csv(const std::vector<SizeRow>& rows) {
  std::string out = "o,improvement,median_improvement,p_value\n";
  for (const auto& r : rows)
    out += std::to_string(r.o) + ',' + format_double(r.improvement) + ',' + format_double(r.median_improvement) +
           ',' + format_double(r.p_value) + '\n';
  return out;
}

}  // namespace ddce
