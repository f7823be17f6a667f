// ddce command-line driver.
#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddce/config.hpp"
#include "ddce/error.hpp"
#include "ddce/io.hpp"
#include "ddce/pipeline.hpp"
#include "ddce/sweeps.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string embeddings;
  // Scalar overrides on top of the config file.
  std::optional<std::size_t> k_models;
  std::optional<double> alpha;
  std::optional<std::size_t> s_min;
  std::optional<std::size_t> n_trials;
  std::string consensus;
  std::string metric;
};

struct Inputs {
  std::string labeled;
  std::string unlabeled;
  std::string outlier_source;
  std::string test_outliers;
};

void add_globals(CLI::App* cmd, Globals& g) {
  cmd->add_option("--config", g.config, "JSON pipeline config");
  cmd->add_option("--seed", g.seed, "master seed (overrides config)");
  cmd->add_option("--out", g.out, "output directory");
  cmd->add_option("--embeddings", g.embeddings, "EMB1 file used instead of the built-in encoder");
}

void add_overrides(CLI::App* cmd, Globals& g) {
  cmd->add_option("--k-models", g.k_models, "number of base models");
  cmd->add_option("--alpha", g.alpha, "intent split ratio");
  cmd->add_option("--s-min", g.s_min, "minimum cluster size");
  cmd->add_option("--trials", g.n_trials, "random search trials per model");
  cmd->add_option("--consensus", g.consensus, "CHM, BOK or BOKV");
  cmd->add_option("--metric", g.metric, "cosine or euclidean");
}

ddce::PipelineConfig resolve_config(const Globals& g) {
  ddce::PipelineConfig cfg = g.config.empty() ? ddce::PipelineConfig{} : ddce::load_config(g.config);
  if (g.seed) cfg.master_seed = *g.seed;
  if (g.k_models) cfg.k_models = *g.k_models;
  if (g.alpha) cfg.alpha = *g.alpha;
  if (g.s_min) cfg.s_min = *g.s_min;
  if (g.n_trials) cfg.search_space.n_trials = *g.n_trials;
  if (!g.consensus.empty()) cfg.consensus_fn = ddce::parse_consensus_fn(g.consensus);
  if (!g.metric.empty()) cfg.metric = ddce::parse_metric(g.metric);
  cfg.validate();
  return cfg;
}

fs::path out_dir(const Globals& g) {
  if (g.out.empty()) throw ddce::UsageError("--out is required");
  return g.out;
}

std::optional<ddce::EmbeddingMatrix> load_embeddings(const Globals& g) {
  if (g.embeddings.empty()) return std::nullopt;
  return ddce::load_precomputed(g.embeddings);
}

const ddce::EmbeddingMatrix* ptr(const std::optional<ddce::EmbeddingMatrix>& e) { return e ? &*e : nullptr; }

std::string require(const std::string& value, const char* flag) {
  if (value.empty()) throw ddce::UsageError(std::string(flag) + " is required");
  return value;
}

void write_json(const fs::path& path, const json& j) { ddce::write_file_atomic(path, j.dump(2) + "\n"); }

// Written before any computation.
void write_manifest(const fs::path& dir, const std::string& command, const Globals& g,
                    const ddce::PipelineConfig& cfg, const json& inputs) {
  json m;
  m["command"] = command;
  m["tool_version"] = kVersion;
  m["config_path"] = g.config.empty() ? json(nullptr) : json(g.config);
  m["config"] = ddce::config_to_json(cfg);
  m["inputs"] = inputs;
  m["embeddings"] = g.embeddings.empty() ? json(nullptr) : json(g.embeddings);
  m["out"] = g.out;
  m["master_seed"] = cfg.master_seed;
  write_json(dir / "manifest.json", m);
}

ddce::Benchmark fixed_benchmark(const Inputs& in) {
  ddce::Benchmark b;
  b.d_l = ddce::to_labeled(ddce::read_dataset_jsonl(require(in.labeled, "--labeled")));
  b.d_ul_clean = ddce::read_dataset_jsonl(require(in.unlabeled, "--unlabeled"));
  if (!b.d_ul_clean.has_ground_truth())
    throw ddce::DataError("sweeps need ground-truth intents in the unlabeled set");
  b.val_outliers = ddce::read_dataset_jsonl(require(in.outlier_source, "--outlier-source"));
  b.test_outliers = in.test_outliers.empty() ? b.val_outliers : ddce::read_dataset_jsonl(in.test_outliers);
  return b;
}

// Synthetic benchmark unless --labeled is given.
ddce::BenchmarkSource make_source(const Inputs& in, const Globals& g, const ddce::BenchmarkSpec& spec,
                                  bool oracle) {
  ddce::BenchmarkSource src;
  if (in.labeled.empty()) {
    src.synthetic = spec;
    src.use_oracle_embeddings = oracle;
  } else {
    src.fixed = fixed_benchmark(in);
    if (oracle) throw ddce::UsageError("--oracle-embeddings only applies to synthetic data");
  }
  src.precomputed = load_embeddings(g);
  return src;
}

json inputs_json(const Inputs& in) {
  json j = json::object();
  auto put = [&](const char* k, const std::string& v) {
    if (!v.empty()) j[k] = v;
  };
  put("labeled", in.labeled);
  put("unlabeled", in.unlabeled);
  put("outlier_source", in.outlier_source);
  put("test_outliers", in.test_outliers);
  return j;
}

int run(int argc, char** argv) {
  CLI::App app{"Density-based deep clustering ensemble for intent induction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Globals g;
  Inputs in;

  // synth
  ddce::BenchmarkSpec synth_spec;
  synth_spec.labeled_intents = 10;
  synth_spec.rows_per_intent = 30;
  auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark");
  add_globals(synth, g);
  synth->add_option("--intents", synth_spec.labeled_intents, "labeled intents");
  synth->add_option("--novel", synth_spec.novel_intents, "novel intents in the unlabeled set");
  synth->add_option("--per-intent", synth_spec.rows_per_intent, "rows per intent");
  synth->add_option("--dim", synth_spec.shape.dim, "oracle embedding dimension");
  synth->add_option("--sigma", synth_spec.shape.blob_sigma, "oracle blob spread");
  synth->add_option("--borrow", synth_spec.shape.borrow_prob, "keyword borrowing probability");

  // inject
  double inject_ratio = 0.5;
  auto* inject = app.add_subcommand("inject", "append outliers to an unlabeled set");
  add_globals(inject, g);
  inject->add_option("--unlabeled", in.unlabeled, "dataset JSONL")->required();
  inject->add_option("--outlier-source", in.outlier_source, "outlier pool JSONL")->required();
  inject->add_option("--ratio", inject_ratio, "outliers per original row");

  // train
  auto* train = app.add_subcommand("train", "train base models and write artifacts");
  add_globals(train, g);
  add_overrides(train, g);
  train->add_option("--labeled", in.labeled, "labeled JSONL")->required();
  train->add_option("--outlier-source", in.outlier_source, "outlier pool JSONL");

  // cluster
  std::string model_path;
  ddce::OpticsParams cluster_params;
  auto* cluster = app.add_subcommand("cluster", "run one OPTICS model");
  add_globals(cluster, g);
  add_overrides(cluster, g);
  cluster->add_option("--unlabeled", in.unlabeled, "dataset JSONL")->required();
  cluster->add_option("--model", model_path, "artifact JSON from train");
  cluster->add_option("--max-eps", cluster_params.max_eps, "used without --model");
  cluster->add_option("--xi", cluster_params.xi, "used without --model");
  cluster->add_option("--min-samples", cluster_params.min_samples, "used without --model");

  // ensemble
  auto* ensemble = app.add_subcommand("ensemble", "train, cluster and combine");
  add_globals(ensemble, g);
  add_overrides(ensemble, g);
  ensemble->add_option("--labeled", in.labeled, "labeled JSONL")->required();
  ensemble->add_option("--unlabeled", in.unlabeled, "dataset JSONL")->required();
  ensemble->add_option("--outlier-source", in.outlier_source, "outlier pool JSONL");

  // baseline-kmeans
  auto* baseline = app.add_subcommand("baseline-kmeans", "k-means baseline");
  add_globals(baseline, g);
  add_overrides(baseline, g);
  baseline->add_option("--labeled", in.labeled, "labeled JSONL")->required();
  baseline->add_option("--unlabeled", in.unlabeled, "dataset JSONL")->required();

  // evaluate
  std::string truth_path, pred_path;
  auto* evaluate = app.add_subcommand("evaluate", "score a partition");
  evaluate->add_option("--truth", truth_path, "dataset JSONL with ground truth")->required();
  evaluate->add_option("--pred", pred_path, "partition JSONL")->required();

  // sweeps
  std::vector<double> alphas{0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<double> ratios{0.25, 0.5, 1.0, 2.0};
  std::vector<std::size_t> o_values{4, 8, 16};
  std::size_t reps = 3;
  double test_ratio = 0.5;
  bool oracle = false;
  ddce::BenchmarkSpec sweep_spec;
  auto add_sweep = [&](const char* name, const char* help) {
    auto* cmd = app.add_subcommand(name, help);
    add_globals(cmd, g);
    add_overrides(cmd, g);
    cmd->add_option("--labeled", in.labeled, "labeled JSONL (default: synthetic benchmark)");
    cmd->add_option("--unlabeled", in.unlabeled, "unlabeled JSONL with ground truth");
    cmd->add_option("--outlier-source", in.outlier_source, "outlier pool for search");
    cmd->add_option("--test-outliers", in.test_outliers, "outlier pool for the test set");
    cmd->add_option("--reps", reps, "seeds per setting");
    cmd->add_option("--per-intent", sweep_spec.rows_per_intent, "synthetic rows per intent");
    cmd->add_option("--novel", sweep_spec.novel_intents, "synthetic novel intents");
    cmd->add_flag("--oracle-embeddings", oracle, "use the synthetic oracle embeddings");
    return cmd;
  };
  auto* sw_alpha = add_sweep("sweep-alpha", "score versus split ratio");
  sw_alpha->add_option("--alphas", alphas, "split ratios")->delimiter(',');
  sw_alpha->add_option("--test-ratio", test_ratio, "test outlier ratio");
  auto* sw_out = add_sweep("sweep-outliers", "score versus test outlier ratio");
  sw_out->add_option("--ratios", ratios, "test outlier ratios")->delimiter(',');
  auto* sw_size = add_sweep("sweep-size", "improvement versus number of labeled intents");
  sw_size->add_option("--o-values", o_values, "labeled intent counts")->delimiter(',');
  sw_size->add_option("--test-ratio", test_ratio, "test outlier ratio");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (synth->parsed()) {
    const auto dir = out_dir(g);
    const std::uint64_t seed = g.seed.value_or(0);
    const auto b = ddce::make_benchmark(synth_spec, seed);
    ddce::write_dataset_jsonl(dir / "labeled.jsonl", b.d_l.as_dataset());
    ddce::write_dataset_jsonl(dir / "unlabeled.jsonl", b.d_ul_clean);
    ddce::write_dataset_jsonl(dir / "val_outliers.jsonl", b.val_outliers);
    ddce::write_dataset_jsonl(dir / "test_outliers.jsonl", b.test_outliers);
    ddce::save_precomputed(dir / "embeddings.emb1", b.oracle);
    return 0;
  }

  if (inject->parsed()) {
    const auto dir = out_dir(g);
    const auto d = ddce::read_dataset_jsonl(in.unlabeled);
    const auto src = ddce::read_dataset_jsonl(in.outlier_source);
    ddce::Rng rng = ddce::derive_stream(g.seed.value_or(0), {0x696e6a656374});
    ddce::write_dataset_jsonl(dir / "injected.jsonl", ddce::inject_outliers(d, src, inject_ratio, rng));
    return 0;
  }

  if (evaluate->parsed()) {
    const auto truth = ddce::read_dataset_jsonl(truth_path);
    const auto pred = ddce::read_partition_jsonl(pred_path);
    std::cout << ddce::scores_to_json(ddce::score(truth, pred)).dump() << "\n";
    return 0;
  }

  const auto cfg = resolve_config(g);
  const auto dir = out_dir(g);

  if (train->parsed()) {
    write_manifest(dir, "train", g, cfg, inputs_json(in));
    const auto d_l = ddce::to_labeled(ddce::read_dataset_jsonl(in.labeled));
    const auto src = in.outlier_source.empty() ? ddce::Dataset{} : ddce::read_dataset_jsonl(in.outlier_source);
    const auto emb = load_embeddings(g);
    const auto artifacts = ddce::train_base_models(ddce::prepare_labeled(d_l, cfg), src, cfg, ptr(emb));
    for (std::size_t k = 0; k < artifacts.size(); ++k)
      write_json(dir / ("model_" + std::to_string(k) + ".json"), ddce::artifact_to_json(artifacts[k]));
    return 0;
  }

  if (cluster->parsed()) {
    write_manifest(dir, "cluster", g, cfg, inputs_json(in));
    const auto d = ddce::read_dataset_jsonl(in.unlabeled);
    const auto emb = load_embeddings(g);
    ddce::BaseModelArtifact a;
    if (!model_path.empty()) {
      a = ddce::artifact_from_json(json::parse(ddce::read_text_file(model_path)));
    } else {
      if (!emb) throw ddce::UsageError("cluster needs --model or --embeddings");
      cluster_params.validate();
      a.params = cluster_params;
    }
    if (!a.encoder && !emb) throw ddce::UsageError("model has no encoder; pass --embeddings");
    const auto e = ddce::embed_with(a, d, ptr(emb));
    auto p = ddce::cluster(e, a.params, cfg.s_min, cfg.metric);
    ddce::write_partition_jsonl(dir / "partition.jsonl", p);
    return 0;
  }

  if (ensemble->parsed()) {
    write_manifest(dir, "ensemble", g, cfg, inputs_json(in));
    const auto d_l = ddce::to_labeled(ddce::read_dataset_jsonl(in.labeled));
    const auto d_ul = ddce::read_dataset_jsonl(in.unlabeled);
    const auto src = in.outlier_source.empty() ? ddce::Dataset{} : ddce::read_dataset_jsonl(in.outlier_source);
    const auto emb = load_embeddings(g);
    const auto r = ddce::run_ddce(d_l, d_ul, src, cfg, ptr(emb));
    ddce::write_partition_jsonl(dir / "partition.jsonl", r.consensus.partition);
    for (std::size_t k = 0; k < r.base.k(); ++k)
      ddce::write_partition_jsonl(dir / ("base_partition_" + std::to_string(k) + ".jsonl"), r.base.partitions[k]);
    write_json(dir / "report.json", ddce::report_to_json(r));
    write_json(dir / "timing.json", json{{"train_seconds", r.timing.train_seconds},
                                         {"infer_seconds", r.timing.infer_seconds},
                                         {"consensus_seconds", r.timing.consensus_seconds}});
    return 0;
  }

  if (baseline->parsed()) {
    write_manifest(dir, "baseline-kmeans", g, cfg, inputs_json(in));
    const auto d_l = ddce::to_labeled(ddce::read_dataset_jsonl(in.labeled));
    const auto d_ul = ddce::read_dataset_jsonl(in.unlabeled);
    const auto emb = load_embeddings(g);
    ddce::write_partition_jsonl(dir / "partition.jsonl", ddce::kmeans_baseline(d_l, d_ul, cfg, ptr(emb)));
    return 0;
  }

  write_manifest(dir, app.get_subcommands().front()->get_name(), g, cfg, inputs_json(in));
  const auto source = make_source(in, g, sweep_spec, oracle);
  if (sw_alpha->parsed()) {
    ddce::write_file_atomic(dir / "sweep_alpha.csv",
                            ddce::alpha_csv(ddce::sweep_alpha(alphas, reps, cfg, source, test_ratio)));
  } else if (sw_out->parsed()) {
    ddce::write_file_atomic(dir / "sweep_outliers.csv",
                            ddce::outlier_csv(ddce::sweep_outlier_ratio(ratios, cfg, source, reps)));
  } else if (sw_size->parsed()) {
    ddce::write_file_atomic(dir / "sweep_size.csv",
                            ddce::size_csv(ddce::sweep_training_size(o_values, reps, cfg, source, test_ratio)));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ddce::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const ddce::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
