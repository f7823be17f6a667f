// Acceptance suite: one PASS/FAIL line per criterion.
//
//   ddce_acceptance [criterion ...]     (default: all nine)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "ddce/consensus.hpp"
#include "ddce/embed.hpp"
#include "ddce/io.hpp"
#include "ddce/metrics.hpp"
#include "ddce/optics.hpp"
#include "ddce/search.hpp"
#include "ddce/sweeps.hpp"
#include "fixtures.hpp"
#include "oracles/metric_oracle.hpp"
#include "oracles/optics_oracle.hpp"
#include "oracles/partition_oracle.hpp"
#include "support.hpp"

#ifndef DDCE_CLI_PATH
#error "DDCE_CLI_PATH must point at the ddce executable"
#endif

using namespace ddce;

namespace {

// Tolerances and thresholds.
constexpr double kMetricTol = 1e-10;
constexpr double kMetricSeconds = 5.0;
constexpr double kBlobAri = 0.9;
constexpr double kCspaTol = 1e-9;
constexpr std::size_t kCspaMinOptimal = 5;
constexpr double kGradRelErr = 1e-4;
constexpr double kFdStep = 1e-4;
constexpr double kTrainAccuracy = 0.95;
constexpr std::size_t kTrainEpochs = 30;
constexpr std::size_t kTrendSeeds = 10;
constexpr std::size_t kTrendWins = 7;
constexpr double kTrendSeconds = 600.0;
constexpr std::size_t kRangeSamples = 1000;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream ss;
  ss.precision(digits);
  ss << v;
  return ss.str();
}

std::vector<double> dense(const DistanceMatrix& d) {
  std::vector<double> out;
  for (std::size_t i = 0; i < d.size(); ++i)
    for (double v : d.row(i)) out.push_back(v);
  return out;
}

Outcome metric_oracles() {
  const auto t0 = Clock::now();
  Rng rng = derive_stream(2024, {1});
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const auto n = static_cast<std::size_t>(uniform_int(rng, 2, 12));
    std::vector<int> a(n), b(n);
    const auto ka = uniform_int(rng, 1, 5), kb = uniform_int(rng, 1, 5);
    for (auto& v : a) v = static_cast<int>(uniform_int(rng, -1, ka - 1));
    for (auto& v : b) v = static_cast<int>(uniform_int(rng, -1, kb - 1));
    worst = std::max(worst, std::abs(ari(a, b) - oracle::ari_pairs(a, b)));
    worst = std::max(worst, std::abs(nmi(a, b) - oracle::nmi_entropy(a, b)));
  }
  const double secs = seconds_since(t0);
  return {worst < kMetricTol && secs < kMetricSeconds,
          "max |delta| " + fmt(worst) + " over 200 pairs, " + fmt(secs) + " s"};
}

Outcome optics_oracle() {
  std::size_t exact = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng = derive_stream(seed, {2});
    const std::size_t n = 10 + (seed * 7) % 51;  // 10..60
    EmbeddingMatrix x(n, 4);
    for (std::size_t i = 0; i < n; ++i) {
      x.ids()[i] = std::to_string(i);
      for (std::size_t k = 0; k < 4; ++k) x(i, k) = standard_normal(rng);
    }
    const auto metric = seed % 2 ? Metric::kEuclidean : Metric::kCosine;
    const double max_eps = metric == Metric::kCosine ? 0.15 + 0.015 * seed : 0.8 + 0.1 * seed;
    const std::size_t ms = 2 + seed % 6;
    DistanceMatrix d(x, metric);
    auto got = compute_ordering(d, max_eps, ms);
    auto ref = oracle::optics_ref(dense(d), n, max_eps, ms);
    exact += got.order == ref.order && got.core_distance == ref.core && got.reachability == ref.reach;
  }
  double worst_ari = 1.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto b = testing::two_blobs(seed);
    auto p = cluster(b.x, testing::kTwoBlobParams, 2, Metric::kCosine);
    std::vector<int> truth, pred;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (b.labels[i] != kOutlier && p.labels[i] != kOutlier) truth.push_back(b.labels[i]), pred.push_back(p.labels[i]);
    worst_ari = std::min(worst_ari, pred.size() >= 2 ? ari(truth, pred) : 0.0);
  }
  return {exact == 20 && worst_ari >= kBlobAri,
          std::to_string(exact) + "/20 orderings exact, min two-blob ARI " + fmt(worst_ari)};
}

Outcome consensus_identities() {
  Rng rng = derive_stream(7, {3});
  std::size_t ok = 0, total = 0;
  bool closed_ok = true;
  for (int t = 0; t < 20; ++t) {
    std::vector<int> base(12);
    for (auto& v : base) v = static_cast<int>(uniform_int(rng, -1, 3));
    const auto k = static_cast<std::size_t>(uniform_int(rng, 1, 6));
    auto ts = testing::set_of(std::vector<std::vector<int>>(k, base));
    const auto p = make_partition(base);
    for (const auto& out : {cspa(ts), mcla(ts), chm(ts).partition, bok(ts).partition, bokv(ts).partition}) {
      ++total;
      ok += same_up_to_relabeling(out, p) && nmi(out, p) == 1.0;
    }

    std::vector<std::vector<int>> mixed(5, std::vector<int>(12));
    for (auto& m : mixed)
      for (auto& v : m) v = static_cast<int>(uniform_int(rng, -1, 3));
    auto closed = testing::set_of(mixed, {0.4, 0.4, 0.6, 0.4, 0.4});
    auto v = bokv(closed);
    auto b = bok(closed);
    closed_ok = closed_ok && v.partition == b.partition && v.winner == b.winner && v.gate == false;
  }
  return {ok == total && closed_ok, std::to_string(ok) + "/" + std::to_string(total) +
                                        " identity checks, closed-gate BOKV equals BOK: " +
                                        (closed_ok ? "yes" : "no")};
}

Outcome cspa_exhaustive() {
  std::size_t ok = 0;
  double worst = 0.0;
  std::string missed;
  const auto instances = testing::cspa_instances();
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& ts = instances[i];
    double best = -std::numeric_limits<double>::infinity();
    oracle::for_each_partition(ts.n(), k_target(ts), [&](const std::vector<int>& l) {
      best = std::max(best, nmi_sum(make_partition(l), ts));
    });
    const double gap = best - nmi_sum(cspa(ts), ts);
    worst = std::max(worst, gap);
    if (gap <= kCspaTol)
      ++ok;
    else
      missed += " #" + std::to_string(i) + " (gap " + fmt(gap) + ")";
  }
  return {ok >= kCspaMinOptimal, std::to_string(ok) + "/" + std::to_string(instances.size()) +
                                     " instances optimal" + (missed.empty() ? "" : ", suboptimal:" + missed)};
}

Outcome encoder_checks() {
  Rng rng = derive_stream(5, {4});
  auto model = init_encoder(32, 6, {"a", "b", "c"}, rng);
  auto x = featurize({"alpha beta", "beta gamma delta", "epsilon"}, 32);
  std::vector<std::size_t> y{0, 1, 2};
  EncoderGradients g;
  loss_and_gradient(model, x, y, &g);
  double worst = 0.0;
  auto check = [&](std::vector<double>& param, const std::vector<double>& grad) {
    for (std::size_t k = 0; k < param.size(); ++k) {
      const double keep = param[k];
      param[k] = keep + kFdStep;
      const double up = loss_and_gradient(model, x, y, nullptr);
      param[k] = keep - kFdStep;
      const double down = loss_and_gradient(model, x, y, nullptr);
      param[k] = keep;
      const double fd = (up - down) / (2 * kFdStep);
      worst = std::max(worst, std::abs(fd - grad[k]) / std::max({std::abs(fd), std::abs(grad[k]), 1e-6}));
    }
  };
  check(model.W, g.W);
  check(model.b, g.b);
  check(model.U, g.U);
  check(model.c, g.c);

  SyntheticSpec spec;
  spec.n_intents = 8;
  spec.rows_per_intent = 40;
  Rng data_rng = derive_stream(5, {5});
  auto d = generate_synthetic(spec, data_rng).labeled;
  auto [train, val] = inner_split(d, 0.2, data_rng);
  TrainConfig cfg;
  cfg.epochs = kTrainEpochs;
  auto r = train_encoder(train, val, cfg);
  return {worst < kGradRelErr && r.val_accuracy >= kTrainAccuracy,
          "max gradient rel err " + fmt(worst) + ", val accuracy " + fmt(r.val_accuracy) + " after " +
              std::to_string(kTrainEpochs) + " epochs"};
}

BenchmarkSpec trend_benchmark() {
  BenchmarkSpec spec;
  spec.labeled_intents = 16;
  spec.novel_intents = 5;
  spec.rows_per_intent = 50;
  return spec;
}

PipelineConfig trend_config(std::uint64_t seed) {
  PipelineConfig cfg;
  cfg.k_models = 5;
  cfg.alpha = 0.5;
  cfg.search_space.n_trials = 100;
  cfg.consensus_fn = ConsensusFn::kBokv;
  cfg.master_seed = seed;
  return cfg;
}

Outcome improvement_trend() {
  const auto t0 = Clock::now();
  std::size_t wins = 0;
  std::vector<double> rel;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < kTrendSeeds; ++seed) {
    const auto b = make_benchmark(trend_benchmark(), seed);
    const auto run = run_benchmark(b, trend_config(seed), 0.5, nullptr);
    wins += run.ensemble_score >= run.base_mean_score;
    rel.push_back(relative_improvement(run.ensemble_score, run.base_mean_score));
    per_seed += " " + fmt(rel.back(), 3);
  }
  const double secs = seconds_since(t0);
  const double med = median(rel);
  return {wins >= kTrendWins && med > 0.0 && secs < kTrendSeconds,
          std::to_string(wins) + "/" + std::to_string(kTrendSeeds) + " seeds BOKV >= base mean, median rel " +
              fmt(med) + ", " + fmt(secs) + " s; per seed:" + per_seed};
}

Outcome outlier_trend() {
  std::size_t wins = 0;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < kTrendSeeds; ++seed) {
    const auto b = make_benchmark(trend_benchmark(), seed);
    const auto rows = outlier_ratio_curve({0.25, 0.5, 1.0, 2.0}, trend_config(seed), b, nullptr);
    const double drop_bokv = rows.front().bokv_score - rows.back().bokv_score;
    const double drop_base = rows.front().base_mean_score - rows.back().base_mean_score;
    wins += drop_bokv <= drop_base;
    per_seed += " " + fmt(drop_bokv, 3) + "/" + fmt(drop_base, 3);
  }
  return {wins >= kTrendWins, std::to_string(wins) + "/" + std::to_string(kTrendSeeds) +
                                  " seeds with BOKV drop <= base drop (bokv/base:" + per_seed + ")"};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DDCE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

Outcome determinism() {
  const auto dir = testing::temp_dir("acceptance_determinism");
  const auto data = (dir / "data").string();
  if (run_cli("synth --intents 10 --per-intent 30 --seed 3 --out " + data) != 0) return {false, "synth failed"};
  write_file_atomic(dir / "c.json", std::string("{\"k_models\": 5, \"consensus_fn\": \"BOKV\"}\n"));
  std::string common = "ensemble --config " + (dir / "c.json").string() + " --seed 7 --labeled " + data +
                       "/labeled.jsonl --unlabeled " + data + "/unlabeled.jsonl --outlier-source " + data +
                       "/val_outliers.jsonl --out ";
  if (run_cli(common + (dir / "r1").string()) != 0 || run_cli(common + (dir / "r2").string()) != 0)
    return {false, "ensemble failed"};
  std::size_t same = 0, total = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir / "r1")) {
    const auto name = entry.path().filename().string();
    if (name == "timing.json" || name == "manifest.json") continue;
    ++total;
    same += read_text_file(entry.path()) == read_text_file(dir / "r2" / name);
  }
  const bool core_files = std::filesystem::exists(dir / "r1" / "partition.jsonl") &&
                          std::filesystem::exists(dir / "r1" / "report.json");
  return {core_files && same == total,
          std::to_string(same) + "/" + std::to_string(total) + " output files byte-identical"};
}

Outcome parameter_ranges() {
  SearchSpace space;
  std::size_t ok = 0;
  for (std::size_t t = 0; t < kRangeSamples; ++t) {
    const auto p = trial_params(space, 99, t);
    ok += p.max_eps > 0.0 && p.max_eps < 0.5 && p.xi > 0.0 && p.xi < 0.5 && p.min_samples >= 2 &&
          p.min_samples <= 20;
  }
  return {ok == kRangeSamples, std::to_string(ok) + "/" + std::to_string(kRangeSamples) + " triples in range"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"metric oracles", metric_oracles},
      {"optics oracle", optics_oracle},
      {"consensus identities", consensus_identities},
      {"cspa exhaustive oracle", cspa_exhaustive},
      {"encoder gradients and training", encoder_checks},
      {"ensemble improvement trend", improvement_trend},
      {"outlier ratio trend", outlier_trend},
      {"cli determinism", determinism},
      {"hyperparameter ranges", parameter_ranges},
  };
  std::vector<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::strtoul(argv[i], nullptr, 10));
  if (selected.empty())
    for (std::size_t i = 1; i <= criteria.size(); ++i) selected.push_back(i);

  int failures = 0;
  for (auto c : selected) {
    if (c < 1 || c > criteria.size()) {
      std::cerr << "no criterion " << c << "\n";
      return 1;
    }
    Outcome o;
    try {
      o = criteria[c - 1].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << "criterion " << c << " [" << criteria[c - 1].first << "]: " << (o.pass ? "PASS" : "FAIL")
              << " - " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
