#include "ddce/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include "ddce/error.hpp"
#include "ddce/kmeans.hpp"

namespace ddce {

namespace {

// Stream purposes under the master seed.
enum : std::uint64_t {
  kStreamCap = 1,
  kStreamSplit,
  kStreamInner,
  kStreamTrain,
  kStreamInject,
  kStreamSearch,
  kStreamConsensus,
  kStreamKMeans,
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void PipelineConfig::validate() const {
  if (k_models < 1) throw UsageError("k_models must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
  if (s_min < 1) throw UsageError("s_min must be >= 1");
  if (!(outlier_ratio >= 0.0)) throw UsageError("outlier_ratio must be >= 0");
  if (train_cfg.feature_dim < 16) throw UsageError("train_cfg.feature_dim must be >= 16");
  if (train_cfg.hidden_dim < 1) throw UsageError("train_cfg.hidden_dim must be >= 1");
  if (train_cfg.batch_size < 1) throw UsageError("train_cfg.batch_size must be >= 1");
  search_space.validate();
  if (search_space.n_trials == 0) throw UsageError("search_space.n_trials must be >= 1");
}

LabeledDataset prepare_labeled(const LabeledDataset& d_l, const PipelineConfig& cfg) {
  Rng rng = derive_stream(cfg.master_seed, {kStreamCap});
  return cap_per_intent(d_l, cfg.max_per_intent, rng);
}

EmbeddingMatrix embed_with(const BaseModelArtifact& artifact, const Dataset& d,
                           const EmbeddingMatrix* precomputed) {
  if (artifact.encoder) return encode(*artifact.encoder, d);
  if (!precomputed) throw UsageError("base model has no encoder and no precomputed embeddings were given");
  auto e = precomputed->select_ids(d.ids());
  e.normalize_rows();
  return e;
}

namespace {

BaseModelArtifact train_one(const LabeledDataset& d_l, const Dataset& outlier_source,
                            const PipelineConfig& cfg, std::size_t k,
                            const EmbeddingMatrix* precomputed) {
  BaseModelArtifact a;
  Rng seed_source = derive_stream(cfg.master_seed, {k, kStreamSplit});
  a.split_seed = next_seed(seed_source);
  Rng split_rng = derive_stream(a.split_seed, {});
  auto split = split_by_intents(d_l, cfg.alpha, split_rng);
  a.rl_intents = split.rl.intents();
  a.hs_intents = split.hs.intents();
  {
    std::set<std::string> rl(a.rl_intents.begin(), a.rl_intents.end());
    for (const auto& i : a.hs_intents)
      if (rl.count(i)) throw std::logic_error("intent-disjoint split shares intent " + i);
  }

  if (!precomputed) {
    Rng inner_rng = derive_stream(cfg.master_seed, {k, kStreamInner});
    auto [train, val] = inner_split(split.rl, kInnerValFraction, inner_rng);
    TrainConfig tc = cfg.train_cfg;
    Rng seed_rng = derive_stream(cfg.master_seed, {k, kStreamTrain});
    tc.seed = next_seed(seed_rng);
    auto trained = train_encoder(train, val, tc);
    a.encoder = std::move(trained.model);
    a.encoder_val_accuracy = trained.val_accuracy;
  }

  Rng inject_rng = derive_stream(cfg.master_seed, {k, kStreamInject});
  const auto hs_truth = inject_outliers(split.hs.as_dataset(), outlier_source, cfg.outlier_ratio, inject_rng);
  const auto e_hs = embed_with(a, hs_truth, precomputed);

  Rng search_rng = derive_stream(cfg.master_seed, {k, kStreamSearch});
  auto found = random_search(e_hs, hs_truth, cfg.search_space, cfg.s_min, cfg.metric, search_rng);
  a.params = found.best_params;
  a.val_scores = found.best_scores;
  a.best_trial = found.best_trial;
  return a;
}

}  // namespace

std::vector<BaseModelArtifact> train_base_models(const LabeledDataset& d_l,
                                                 const Dataset& outlier_source,
                                                 const PipelineConfig& cfg,
                                                 const EmbeddingMatrix* precomputed) {
  cfg.validate();
  if (cfg.outlier_ratio > 0.0 && outlier_source.empty())
    throw DataError("outlier source is empty but outlier_ratio > 0");
  std::vector<BaseModelArtifact> out;
  out.reserve(cfg.k_models);
  for (std::size_t k = 0; k < cfg.k_models; ++k) {
    try {
      out.push_back(train_one(d_l, outlier_source, cfg, k, precomputed));
    } catch (const UsageError&) {
      throw;
    } catch (const DataError& e) {
      throw DataError("base model " + std::to_string(k) + ": " + e.what());
    }
  }
  return out;
}

PartitionSet infer(const Dataset& d_ul, const std::vector<BaseModelArtifact>& artifacts,
                   const PipelineConfig& cfg, const EmbeddingMatrix* precomputed) {
  if (artifacts.empty()) throw UsageError("no base models to run");
  PartitionSet ts;
  for (const auto& a : artifacts) {
    auto e = embed_with(a, d_ul, precomputed);
    ts.partitions.push_back(cluster(e, a.params, cfg.s_min, cfg.metric));
    ts.val_recalls.push_back(a.val_scores.score_c);
  }
  return ts;
}

double RunReport::base_mean_score() const {
  if (!base_test_scores || base_test_scores->empty()) throw DataError("no ground-truth scores in report");
  double s = 0.0;
  for (const auto& sc : *base_test_scores) s += sc.score;
  return s / static_cast<double>(base_test_scores->size());
}

RunReport run_inference(const Dataset& d_ul, std::vector<BaseModelArtifact> artifacts,
                        const PipelineConfig& cfg, const EmbeddingMatrix* precomputed) {
  RunReport r;
  r.artifacts = std::move(artifacts);
  auto t0 = std::chrono::steady_clock::now();
  r.base = infer(d_ul, r.artifacts, cfg, precomputed);
  r.timing.infer_seconds = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  Rng crng = derive_stream(cfg.master_seed, {kStreamConsensus});
  r.consensus = apply_consensus(cfg.consensus_fn, r.base, next_seed(crng));
  r.timing.consensus_seconds = seconds_since(t0);

  if (!d_ul.empty() && d_ul.has_ground_truth()) {
    std::vector<Scores> base;
    for (const auto& p : r.base.partitions) base.push_back(score(d_ul, p));
    r.base_test_scores = std::move(base);
    r.consensus_scores = score(d_ul, r.consensus.partition);
  }
  return r;
}

RunReport run_ddce(const LabeledDataset& d_l, const Dataset& d_ul, const Dataset& outlier_source,
                   const PipelineConfig& cfg, const EmbeddingMatrix* precomputed) {
  cfg.validate();
  d_ul.validate();
  const auto labeled = prepare_labeled(d_l, cfg);
  auto t0 = std::chrono::steady_clock::now();
  auto artifacts = train_base_models(labeled, outlier_source, cfg, precomputed);
  const double train_s = seconds_since(t0);
  auto r = run_inference(d_ul, std::move(artifacts), cfg, precomputed);
  r.timing.train_seconds = train_s;
  return r;
}

nlohmann::json scores_to_json(const Scores& s) {
  return {{"score_c", s.score_c}, {"score_ari", s.score_ari}, {"score", s.score}};
}

namespace {

nlohmann::json params_to_json(const OpticsParams& p) {
  return {{"max_eps", p.max_eps}, {"xi", p.xi}, {"min_samples", p.min_samples}};
}

}  // namespace

nlohmann::json report_to_json(const RunReport& r) {
  using nlohmann::json;
  json models = json::array();
  for (std::size_t k = 0; k < r.artifacts.size(); ++k) {
    const auto& a = r.artifacts[k];
    json m;
    m["index"] = k;
    m["params"] = params_to_json(a.params);
    m["val_scores"] = scores_to_json(a.val_scores);
    m["split_seed"] = a.split_seed;
    m["hs_intents"] = a.hs_intents;
    m["encoder"] = a.encoder ? "builtin" : "precomputed";
    m["encoder_val_accuracy"] = a.encoder_val_accuracy;
    m["clusters"] = r.base.partitions[k].num_clusters();
    m["outliers"] = r.base.partitions[k].num_outliers();
    if (r.base_test_scores) m["test_scores"] = scores_to_json((*r.base_test_scores)[k]);
    models.push_back(std::move(m));
  }
  json c;
  c["function"] = to_string(r.consensus.fn);
  c["chosen"] = r.consensus.chosen;
  json cands = json::object();
  for (const auto& [name, s] : r.consensus.candidate_scores) cands[name] = s;
  c["candidate_nmi_sums"] = std::move(cands);
  c["gate"] = r.consensus.gate ? json(*r.consensus.gate) : json(nullptr);
  c["winner"] = r.consensus.winner ? json(*r.consensus.winner) : json(nullptr);
  c["outlier_votes"] = r.consensus.outlier_votes;
  c["clusters"] = r.consensus.partition.num_clusters();
  c["outliers"] = r.consensus.partition.num_outliers();
  c["partition"] = "partition.jsonl";
  if (r.consensus_scores) c["test_scores"] = scores_to_json(*r.consensus_scores);

  json out;
  out["base_models"] = std::move(models);
  out["consensus"] = std::move(c);
  if (r.base_test_scores) out["base_mean_score"] = r.base_mean_score();
  return out;
}

Partition kmeans_baseline(const LabeledDataset& d_l, const Dataset& d_ul, const PipelineConfig& cfg,
                          const EmbeddingMatrix* precomputed) {
  if (d_l.empty()) throw DataError("labeled data is empty");
  const auto labeled = prepare_labeled(d_l, cfg);
  const std::size_t m = d_ul.size();
  Partition out;
  out.ids = d_ul.ids();
  if (m == 0) return out;

  EmbeddingMatrix e;
  if (precomputed) {
    e = precomputed->select_ids(d_ul.ids());
    e.normalize_rows();
  } else {
    Rng inner_rng = derive_stream(cfg.master_seed, {kStreamKMeans, kStreamInner});
    auto [train, val] = inner_split(labeled, kInnerValFraction, inner_rng);
    TrainConfig tc = cfg.train_cfg;
    Rng seed_rng = derive_stream(cfg.master_seed, {kStreamKMeans, kStreamTrain});
    tc.seed = next_seed(seed_rng);
    e = encode(train_encoder(train, val, tc).model, d_ul);
  }
  const auto kc = inflated_cluster_count(labeled.size(), labeled.num_intents(), m);
  Rng rng = derive_stream(cfg.master_seed, {kStreamKMeans});
  auto km = kmeans(e, kc, rng);
  out.labels = std::move(km.labels);
  auto ids = out.ids;
  out = filter_small_clusters(std::move(out), 2);
  out.ids = std::move(ids);
  return out;
}

nlohmann::json artifact_to_json(const BaseModelArtifact& a) {
  using nlohmann::json;
  json j;
  j["params"] = params_to_json(a.params);
  j["val_scores"] = scores_to_json(a.val_scores);
  j["split_seed"] = a.split_seed;
  j["rl_intents"] = a.rl_intents;
  j["hs_intents"] = a.hs_intents;
  j["encoder_val_accuracy"] = a.encoder_val_accuracy;
  j["best_trial"] = a.best_trial;
  if (a.encoder) {
    const auto& m = *a.encoder;
    j["encoder"] = {{"feature_dim", m.feature_dim}, {"hidden_dim", m.hidden_dim},
                    {"class_labels", m.class_labels}, {"W", m.W}, {"b", m.b}, {"U", m.U}, {"c", m.c}};
  } else {
    j["encoder"] = nullptr;
  }
  return j;
}

BaseModelArtifact artifact_from_json(const nlohmann::json& j) {
  try {
    BaseModelArtifact a;
    const auto& p = j.at("params");
    a.params = {p.at("max_eps").get<double>(), p.at("xi").get<double>(), p.at("min_samples").get<std::size_t>()};
    a.params.validate();
    const auto& s = j.at("val_scores");
    a.val_scores = {s.at("score_c").get<double>(), s.at("score_ari").get<double>(), s.at("score").get<double>()};
    a.split_seed = j.at("split_seed").get<std::uint64_t>();
    a.rl_intents = j.at("rl_intents").get<std::vector<std::string>>();
    a.hs_intents = j.at("hs_intents").get<std::vector<std::string>>();
    a.encoder_val_accuracy = j.at("encoder_val_accuracy").get<double>();
    a.best_trial = j.at("best_trial").get<std::size_t>();
    const auto& e = j.at("encoder");
    if (!e.is_null()) {
      EncoderModel m;
      m.feature_dim = e.at("feature_dim").get<std::size_t>();
      m.hidden_dim = e.at("hidden_dim").get<std::size_t>();
      m.class_labels = e.at("class_labels").get<std::vector<std::string>>();
      m.W = e.at("W").get<std::vector<double>>();
      m.b = e.at("b").get<std::vector<double>>();
      m.U = e.at("U").get<std::vector<double>>();
      m.c = e.at("c").get<std::vector<double>>();
      const auto C = m.class_labels.size();
      if (m.W.size() != m.feature_dim * m.hidden_dim || m.b.size() != m.hidden_dim ||
          m.U.size() != m.hidden_dim * C || m.c.size() != C)
        throw DataError("encoder weight shapes do not match its dimensions");
      a.encoder = std::move(m);
    }
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed base model artifact: ") + e.what());
  }
}

}  // namespace ddce
