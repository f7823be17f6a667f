#include <doctest.h>

#include <set>

#include "ddce/error.hpp"
#include "ddce/kmeans.hpp"
#include "ddce/pipeline.hpp"
#include "ddce/sweeps.hpp"
#include "support.hpp"

using namespace ddce;

namespace {

// 10 labeled intents, 5 novel ones, test outlier ratio 0.5.
const Benchmark& small_benchmark() {
  static const Benchmark b = [] {
    BenchmarkSpec spec;
    spec.labeled_intents = 10;
    spec.novel_intents = 5;
    spec.rows_per_intent = 20;
    return make_benchmark(spec, 3);
  }();
  return b;
}

PipelineConfig quick_config(std::size_t k = 3) {
  PipelineConfig cfg;
  cfg.k_models = k;
  cfg.search_space.n_trials = 20;
  cfg.train_cfg.epochs = 10;
  cfg.master_seed = 11;
  return cfg;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("train produces K artifacts with disjoint splits") {
  const auto& b = small_benchmark();
  auto cfg = quick_config(5);
  auto arts = train_base_models(b.d_l, b.val_outliers, cfg);
  REQUIRE(arts.size() == 5);
  std::set<std::uint64_t> seeds;
  for (const auto& a : arts) {
    seeds.insert(a.split_seed);
    std::set<std::string> rl(a.rl_intents.begin(), a.rl_intents.end());
    for (const auto& h : a.hs_intents) CHECK(rl.count(h) == 0);
    CHECK(rl.size() + a.hs_intents.size() == b.d_l.num_intents());
    CHECK(a.encoder.has_value());
    CHECK_NOTHROW(a.params.validate());
    CHECK(a.val_scores.score_c >= 0.0);
  }
  CHECK(seeds.size() == 5);
}

TEST_CASE("single model pipeline") {
  const auto& b = small_benchmark();
  auto cfg = quick_config(1);
  auto d_ul = test_set(b, 0.5, 1);
  auto r = run_ddce(b.d_l, d_ul, b.val_outliers, cfg);
  CHECK(r.base.k() == 1);
  CHECK(r.consensus.partition.size() == d_ul.size());
  REQUIRE(r.consensus_scores.has_value());
}

TEST_CASE("runs are deterministic") {
  const auto& b = small_benchmark();
  auto cfg = quick_config(2);
  auto d_ul = test_set(b, 0.5, 1);
  auto r1 = run_ddce(b.d_l, d_ul, b.val_outliers, cfg);
  auto r2 = run_ddce(b.d_l, d_ul, b.val_outliers, cfg);
  CHECK(report_to_json(r1) == report_to_json(r2));
  CHECK(r1.consensus.partition == r2.consensus.partition);
  cfg.master_seed += 1;
  auto r3 = run_ddce(b.d_l, d_ul, b.val_outliers, cfg);
  CHECK(report_to_json(r1) != report_to_json(r3));
}

TEST_CASE("inference output shape and s_min") {
  const auto& b = small_benchmark();
  auto cfg = quick_config(3);
  cfg.s_min = 3;
  auto arts = train_base_models(b.d_l, b.val_outliers, cfg);
  auto d_ul = test_set(b, 0.5, 2);
  auto ts = infer(d_ul, arts, cfg);
  REQUIRE(ts.k() == 3);
  for (const auto& p : ts.partitions) {
    CHECK(p.ids == d_ul.ids());
    CHECK(p.num_clusters() >= 1);
    for (auto s : cluster_sizes(p)) CHECK(s >= 3);
  }
  for (auto fn : {ConsensusFn::kChm, ConsensusFn::kBok, ConsensusFn::kBokv}) {
    auto c = apply_consensus(fn, ts);
    for (auto s : cluster_sizes(canonicalize(c.partition))) CHECK(s >= 3);
  }

  auto empty = infer(Dataset{}, arts, cfg);
  CHECK(empty.k() == 3);
  for (const auto& p : empty.partitions) CHECK(p.empty());
  CHECK_THROWS_AS(infer(d_ul, {}, cfg), UsageError);
}

TEST_CASE("BOK output is one of the base partitions") {
  const auto& b = small_benchmark();
  auto cfg = quick_config(3);
  cfg.consensus_fn = ConsensusFn::kBok;
  auto r = run_ddce(b.d_l, test_set(b, 0.5, 3), b.val_outliers, cfg);
  bool found = false;
  for (const auto& p : r.base.partitions) found = found || p == r.consensus.partition;
  CHECK(found);
}

TEST_CASE("BOK over identical artifacts returns that partition") {
  const auto& b = small_benchmark();
  auto cfg = quick_config(1);
  auto arts = train_base_models(b.d_l, b.val_outliers, cfg);
  std::vector<BaseModelArtifact> same(3, arts.front());
  cfg.consensus_fn = ConsensusFn::kBok;
  auto r = run_inference(test_set(b, 0.5, 4), same, cfg);
  CHECK(r.consensus.partition == r.base.partitions.front());
}

TEST_CASE("precomputed embeddings bypass the encoder") {
  const auto& b = small_benchmark();
  auto cfg = quick_config(2);
  auto arts = train_base_models(b.d_l, b.val_outliers, cfg, &b.oracle);
  for (const auto& a : arts) CHECK_FALSE(a.encoder.has_value());
  auto d_ul = test_set(b, 0.5, 5);
  auto r = run_inference(d_ul, arts, cfg, &b.oracle);
  CHECK(r.consensus_scores->score > 0.0);

  Dataset stranger = d_ul;
  stranger.rows.push_back({"not-in-matrix", "x", std::nullopt, false});
  CHECK_THROWS_AS(infer(stranger, arts, cfg, &b.oracle), DataError);
}

TEST_CASE("missing ground truth leaves scores out") {
  const auto& b = small_benchmark();
  auto cfg = quick_config(1);
  Dataset hidden = b.d_ul_clean;
  for (auto& r : hidden.rows) r.intent.reset();
  auto r = run_ddce(b.d_l, hidden, b.val_outliers, cfg);
  CHECK_FALSE(r.consensus_scores.has_value());
  CHECK_THROWS_AS(r.base_mean_score(), DataError);
  CHECK_FALSE(report_to_json(r).contains("base_mean_score"));
}

TEST_CASE("training errors name the model") {
  auto cfg = quick_config(1);
  try {
    train_base_models(testing::toy_labeled(1, 10), testing::outlier_pool(10), cfg);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("base model 0") != std::string::npos);
  }
  CHECK_THROWS_AS(train_base_models(testing::toy_labeled(4, 10), Dataset{}, cfg), DataError);
  cfg.k_models = 0;
  CHECK_THROWS_AS(train_base_models(testing::toy_labeled(4, 10), testing::outlier_pool(40), cfg), UsageError);
}

TEST_CASE("artifact json round trip") {
  const auto& b = small_benchmark();
  auto arts = train_base_models(b.d_l, b.val_outliers, quick_config(1));
  auto back = artifact_from_json(artifact_to_json(arts.front()));
  CHECK(back.params == arts.front().params);
  CHECK(back.val_scores == arts.front().val_scores);
  CHECK(back.encoder == arts.front().encoder);
  CHECK(back.split_seed == arts.front().split_seed);
  CHECK_THROWS_AS(artifact_from_json(nlohmann::json{{"params", 1}}), DataError);
}

TEST_CASE("per-intent cap") {
  auto cfg = quick_config();
  cfg.max_per_intent = 5;
  CHECK(prepare_labeled(testing::toy_labeled(3, 9), cfg).size() == 15);
}

TEST_CASE("kmeans baseline") {
  const auto& b = small_benchmark();
  auto cfg = quick_config();
  auto d_ul = test_set(b, 0.5, 6);
  auto p = kmeans_baseline(b.d_l, d_ul, cfg, &b.oracle);
  CHECK(p.ids == d_ul.ids());
  for (auto s : cluster_sizes(canonicalize(p))) CHECK(s >= 2);
  CHECK(p.num_clusters() <= inflated_cluster_count(b.d_l.size(), b.d_l.num_intents(), d_ul.size()));
  CHECK(kmeans_baseline(b.d_l, d_ul, cfg) == kmeans_baseline(b.d_l, d_ul, cfg));
  CHECK_THROWS_AS(kmeans_baseline(LabeledDataset{}, d_ul, cfg), DataError);
}

}  // TEST_SUITE
