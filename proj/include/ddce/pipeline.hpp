#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ddce/consensus.hpp"
#include "ddce/corpus.hpp"
#include "ddce/embed.hpp"
#include "ddce/metrics.hpp"
#include "ddce/optics.hpp"
#include "ddce/search.hpp"

#include <json.hpp>

namespace ddce {

struct PipelineConfig {
  std::size_t k_models = 5;
  double alpha = 0.5;
  std::size_t s_min = 2;
  SearchSpace search_space;
  ConsensusFn consensus_fn = ConsensusFn::kBokv;
  TrainConfig train_cfg;
  Metric metric = Metric::kCosine;
  // Injection ratio for each base model's held-out search set.
  double outlier_ratio = 0.5;
  std::uint64_t master_seed = 0;
  // Per-intent cap applied to labeled data before training; 0 disables.
  std::size_t max_per_intent = 50;

  void validate() const;
};

// Held-out fraction of D_l^rl used to pick the best encoder epoch.
inline constexpr double kInnerValFraction = 0.2;

struct BaseModelArtifact {
  // Empty when the model reads precomputed embeddings.
  std::optional<EncoderModel> encoder;
  OpticsParams params;
  Scores val_scores;
  std::uint64_t split_seed = 0;
  std::vector<std::string> rl_intents;
  std::vector<std::string> hs_intents;
  double encoder_val_accuracy = 0.0;
  std::size_t best_trial = 0;
};

// Applies the per-intent cap with a stream derived from the master seed.
LabeledDataset prepare_labeled(const LabeledDataset& d_l, const PipelineConfig& cfg);

// Trains K base models. With `precomputed` set, no encoder is trained and
// every embedding is looked up by id in that matrix.
std::vector<BaseModelArtifact> train_base_models(const LabeledDataset& d_l,
                                                 const Dataset& outlier_source,
                                                 const PipelineConfig& cfg,
                                                 const EmbeddingMatrix* precomputed = nullptr);

EmbeddingMatrix embed_with(const BaseModelArtifact& artifact, const Dataset& d,
                           const EmbeddingMatrix* precomputed);

PartitionSet infer(const Dataset& d_ul, const std::vector<BaseModelArtifact>& artifacts,
                   const PipelineConfig& cfg, const EmbeddingMatrix* precomputed = nullptr);

struct RunTiming {
  double train_seconds = 0.0;
  double infer_seconds = 0.0;
  double consensus_seconds = 0.0;
};

struct RunReport {
  std::vector<BaseModelArtifact> artifacts;
  PartitionSet base;
  ConsensusResult consensus;
  // Present when d_ul carries ground truth for every row.
  std::optional<std::vector<Scores>> base_test_scores;
  std::optional<Scores> consensus_scores;
  RunTiming timing;

  // Mean base-model test score; requires ground truth.
  double base_mean_score() const;
};

// Consensus over already-trained artifacts.
RunReport run_inference(const Dataset& d_ul, std::vector<BaseModelArtifact> artifacts,
                        const PipelineConfig& cfg, const EmbeddingMatrix* precomputed = nullptr);

RunReport run_ddce(const LabeledDataset& d_l, const Dataset& d_ul, const Dataset& outlier_source,
                   const PipelineConfig& cfg, const EmbeddingMatrix* precomputed = nullptr);

// Deterministic report (no timing).
nlohmann::json report_to_json(const RunReport& r);

// K-means with the inflated cluster count, clusters of one member become
// outliers. Embeddings come from `precomputed` or from one encoder trained on
// all of d_l.
Partition kmeans_baseline(const LabeledDataset& d_l, const Dataset& d_ul, const PipelineConfig& cfg,
                          const EmbeddingMatrix* precomputed = nullptr);

nlohmann::json artifact_to_json(const BaseModelArtifact& a);
BaseModelArtifact artifact_from_json(const nlohmann::json& j);

nlohmann::json scores_to_json(const Scores& s);

}  // namespace ddce
