#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ddce/corpus.hpp"
#include "ddce/pipeline.hpp"

namespace ddce {

// Synthetic intent-induction benchmark: labeled intents for D_l, disjoint
// novel intents for D_ul, and two outlier pools (search-time and test-time).
struct BenchmarkSpec {
  std::size_t labeled_intents = 16;
  std::size_t novel_intents = 5;
  std::size_t rows_per_intent = 50;
  // Pool sizes are chosen so any injection ratio up to these bounds fits.
  double max_val_outlier_ratio = 2.0;
  double max_test_outlier_ratio = 2.0;
  SyntheticSpec shape;  // n_intents, rows_per_intent and prefix are overridden
};

struct Benchmark {
  LabeledDataset d_l;
  Dataset d_ul_clean;  // novel intents with hidden ground truth
  Dataset val_outliers;
  Dataset test_outliers;
  EmbeddingMatrix oracle;  // oracle embedding for every row above
};

Benchmark make_benchmark(const BenchmarkSpec& spec, std::uint64_t seed);

// D_ul with round(ratio * |D_ul|) injected outliers. Outlier sets for
// increasing ratios under one seed are nested.
Dataset test_set(const Benchmark& b, double ratio, std::uint64_t seed);

// Where sweeps get their data: generated per seed, or a fixed user dataset.
struct BenchmarkSource {
  std::optional<BenchmarkSpec> synthetic;
  std::optional<Benchmark> fixed;
  bool use_oracle_embeddings = false;  // synthetic only
  std::optional<EmbeddingMatrix> precomputed;

  // With `labeled_intents`, D_l is restricted to that many intents
  // (sampled under `seed` for fixed data).
  Benchmark get(std::uint64_t seed, std::optional<std::size_t> labeled_intents = std::nullopt) const;
  const EmbeddingMatrix* embeddings(const Benchmark& b) const;
};

struct EnsembleRun {
  double ensemble_score = 0.0;
  double base_mean_score = 0.0;
};

// One full pipeline run on a benchmark test set at `test_ratio`.
EnsembleRun run_benchmark(const Benchmark& b, const PipelineConfig& cfg, double test_ratio,
                          const EmbeddingMatrix* precomputed);

struct AlphaRow {
  double alpha = 0.0;
  double mean_score = 0.0;
  double variance = 0.0;  // sample variance over reps
};

std::vector<AlphaRow> sweep_alpha(const std::vector<double>& alphas, std::size_t reps,
                                  const PipelineConfig& base, const BenchmarkSource& source,
                                  double test_ratio);

struct OutlierRow {
  double ratio = 0.0;
  double bokv_score = 0.0;
  double base_mean_score = 0.0;
};

// One seed: base models trained once, then scored on nested test sets.
std::vector<OutlierRow> outlier_ratio_curve(const std::vector<double>& ratios, const PipelineConfig& cfg,
                                            const Benchmark& b, const EmbeddingMatrix* precomputed);

// Averages outlier_ratio_curve over `reps` seeds derived from the master seed.
std::vector<OutlierRow> sweep_outlier_ratio(const std::vector<double>& ratios, const PipelineConfig& cfg,
                                            const BenchmarkSource& source, std::size_t reps = 1);

struct SizeRow {
  std::size_t o = 0;
  double improvement = 0.0;         // (mean ensemble - mean base) / mean base
  double median_improvement = 0.0;  // median of per-seed relative improvements
  double p_value = 1.0;             // Wilcoxon signed-rank, ensemble vs base mean
  std::vector<EnsembleRun> runs;
};

std::vector<SizeRow> sweep_training_size(const std::vector<std::size_t>& o_values, std::size_t reps,
                                         const PipelineConfig& cfg, const BenchmarkSource& source,
                                         double test_ratio);

// (ensemble - base) / base; 0 when both are 0, +inf when only base is 0.
double relative_improvement(double ensemble, double base);

// Two-sided Wilcoxon signed-rank p-value for paired samples. Zero differences
// are dropped; tied magnitudes get average ranks. Exact null distribution for
// up to 25 nonzero pairs, normal approximation above.
double wilcoxon_signed_rank(const std::vector<double>& x, const std::vector<double>& y);

double median(std::vector<double> v);

std::string alpha_csv(const std::vector<AlphaRow>& rows);
std::string outlier_csv(const std::vector<OutlierRow>& rows);
std::string size_csv(const std::vector<SizeRow>& rows);

}  // namespace ddce
