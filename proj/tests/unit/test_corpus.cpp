#include <doctest.h>

#include <algorithm>
#include <set>

#include "ddce/corpus.hpp"
#include "ddce/error.hpp"
#include "ddce/io.hpp"
#include "support.hpp"

using namespace ddce;

namespace {

std::set<std::string> intent_set(const LabeledDataset& d) { return {d.intents().begin(), d.intents().end()}; }

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("held-out intent count rounds half up and clamps") {
  CHECK(heldout_intent_count(8, 0.5) == 4);
  CHECK(heldout_intent_count(2, 0.5) == 1);
  CHECK(heldout_intent_count(5, 0.5) == 3);
  CHECK(heldout_intent_count(10, 0.01) == 1);
  CHECK(heldout_intent_count(10, 0.99) == 9);
  CHECK_THROWS_AS(heldout_intent_count(1, 0.5), UnsplittableDatasetError);
}

TEST_CASE("split by intents is disjoint and covers every intent") {
  const auto d = testing::toy_labeled(8, 3);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng = derive_stream(seed, {1});
    const double alpha = 0.1 + 0.8 * static_cast<double>(seed % 9) / 8.0;
    auto s = split_by_intents(d, alpha, rng);
    auto rl = intent_set(s.rl), hs = intent_set(s.hs);
    std::vector<std::string> both;
    std::set_intersection(rl.begin(), rl.end(), hs.begin(), hs.end(), std::back_inserter(both));
    CHECK(both.empty());
    CHECK(rl.size() + hs.size() == 8);
    CHECK(hs.size() == heldout_intent_count(8, alpha));
    CHECK(s.rl.size() + s.hs.size() == d.size());
  }
}

TEST_CASE("split by intents edge cases") {
  Rng rng = derive_stream(1, {1});
  auto s = split_by_intents(testing::toy_labeled(2, 4), 0.5, rng);
  CHECK(s.rl.num_intents() == 1);
  CHECK(s.hs.num_intents() == 1);
  auto s5 = split_by_intents(testing::toy_labeled(5, 2), 0.5, rng);
  CHECK(s5.hs.num_intents() == 3);
  CHECK(s5.rl.num_intents() == 2);
  CHECK_THROWS_AS(split_by_intents(testing::toy_labeled(1, 4), 0.5, rng), UnsplittableDatasetError);
  CHECK_THROWS_AS(split_by_intents(testing::toy_labeled(4, 4), 0.0, rng), UsageError);
  CHECK_THROWS_AS(split_by_intents(testing::toy_labeled(4, 4), 1.0, rng), UsageError);
}

TEST_CASE("split by intents is deterministic per seed") {
  const auto d = testing::toy_labeled(12, 2);
  Rng a = derive_stream(9, {1}), b = derive_stream(9, {1});
  CHECK(split_by_intents(d, 0.5, a).hs == split_by_intents(d, 0.5, b).hs);
}

TEST_CASE("inner split is stratified") {
  Rng rng = derive_stream(3, {2});
  auto [train, val] = inner_split(testing::toy_labeled(4, 10), 0.2, rng);
  CHECK(val.size() == 8);
  CHECK(train.size() == 32);
  for (const auto& intent : val.intents()) {
    const auto labels = val.labels();
    auto n = std::count(labels.begin(), labels.end(), intent);
    CHECK(n == 2);
  }
  CHECK(train.intents() == val.intents());

  auto [t2, v2] = inner_split(testing::toy_labeled(3, 2), 0.5, rng);
  CHECK(t2.size() == 3);
  CHECK(v2.size() == 3);
  CHECK(t2.intents() == v2.intents());

  // Tiny fractions still leave one row on each side.
  auto [t3, v3] = inner_split(testing::toy_labeled(3, 2), 0.01, rng);
  CHECK(v3.size() == 3);
}

TEST_CASE("inner split rejects singleton intents and is deterministic") {
  std::vector<Utterance> rows{testing::row("a", "x"), testing::row("b", "x"), testing::row("c", "y")};
  Rng rng = derive_stream(0, {2});
  CHECK_THROWS_AS(inner_split(LabeledDataset(rows), 0.2, rng), StratificationError);

  const auto d = testing::toy_labeled(5, 7);
  Rng a = derive_stream(4, {2}), b = derive_stream(4, {2});
  CHECK(inner_split(d, 0.2, a) == inner_split(d, 0.2, b));
}

TEST_CASE("inject outliers counts and flags") {
  Rng rng = derive_stream(5, {3});
  const auto d = testing::toy_labeled(10, 10).as_dataset();
  const auto src = testing::outlier_pool(300);

  auto out = inject_outliers(d, src, 0.547, rng);
  CHECK(out.size() == 155);
  CHECK(std::equal(d.rows.begin(), d.rows.end(), out.rows.begin()));
  for (std::size_t i = 100; i < out.size(); ++i) {
    CHECK(out.rows[i].is_injected_outlier);
    CHECK_FALSE(out.rows[i].intent.has_value());
  }
  out.validate();

  CHECK(inject_outliers(d, src, 0.0, rng) == d);

  const auto half = testing::toy_labeled(5, 10).as_dataset();
  CHECK(inject_outliers(half, src, 2.0, rng).size() == 150);
}

TEST_CASE("inject outliers errors") {
  Rng rng = derive_stream(5, {3});
  const auto d = testing::toy_labeled(10, 10).as_dataset();
  try {
    inject_outliers(d, testing::outlier_pool(10), 0.5, rng);
    FAIL("expected an error");
  } catch (const InsufficientSourceError& e) {
    CHECK(e.required() == 50);
    CHECK(std::string(e.what()).find("50") != std::string::npos);
  }
  ddce::Dataset clash = testing::outlier_pool(5);
  clash.rows[0].id = d.rows[0].id;
  CHECK_THROWS_AS(inject_outliers(d, clash, 0.05, rng), DataError);
  CHECK_THROWS_AS(inject_outliers(d, clash, -1.0, rng), UsageError);
}

TEST_CASE("inject outliers property: size and sampling without replacement") {
  const auto src = testing::outlier_pool(200);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng = derive_stream(seed, {3});
    const std::size_t n = 1 + seed * 2;
    const double ratio = static_cast<double>(seed % 7) * 0.33;
    Dataset d;
    for (std::size_t i = 0; i < n; ++i) d.rows.push_back(testing::row("u" + std::to_string(i), "x"));
    auto out = inject_outliers(d, src, ratio, rng);
    CHECK(out.size() == n + injected_count(n, ratio));
    out.validate();
  }
}

TEST_CASE("cap per intent") {
  Rng rng = derive_stream(0, {4});
  const auto d = testing::toy_labeled(3, 80);
  auto c = cap_per_intent(d, 50, rng);
  CHECK(c.size() == 150);
  CHECK(c.intents() == d.intents());
  CHECK(cap_per_intent(d, 0, rng) == d);
  CHECK(cap_per_intent(testing::toy_labeled(3, 10), 50, rng).size() == 30);
}

TEST_CASE("synthetic generator shape and determinism") {
  SyntheticSpec spec;
  spec.n_intents = 10;
  spec.rows_per_intent = 30;
  Rng a = derive_stream(11, {5}), b = derive_stream(11, {5});
  auto s = generate_synthetic(spec, a);
  auto t = generate_synthetic(spec, b);
  CHECK(s.labeled.num_intents() == 10);
  CHECK(s.labeled.size() == 300);
  CHECK(s.oracle.rows() == 300);
  CHECK(s.oracle.cols() == spec.dim);
  CHECK(s.labeled == t.labeled);
  CHECK(s.oracle == t.oracle);
  CHECK(s.oracle.ids() == s.labeled.as_dataset().ids());
}

TEST_CASE("synthetic blob_sigma zero collapses each intent") {
  SyntheticSpec spec;
  spec.n_intents = 3;
  spec.rows_per_intent = 5;
  spec.blob_sigma = 0.0;
  Rng rng = derive_stream(2, {5});
  auto s = generate_synthetic(spec, rng);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t j = 1; j < 5; ++j)
      for (std::size_t k = 0; k < spec.dim; ++k) CHECK(s.oracle(c * 5 + j, k) == s.oracle(c * 5, k));
}

TEST_CASE("outlier pool rows are unlabeled with distinct ids") {
  SyntheticSpec spec;
  spec.prefix = "pool";
  Rng rng = derive_stream(2, {6});
  auto [d, e] = generate_outlier_pool(40, spec, rng);
  CHECK(d.size() == 40);
  CHECK(e.rows() == 40);
  d.validate();
  for (const auto& r : d.rows) CHECK_FALSE(r.intent.has_value());

  spec.rows_per_intent = 8;
  auto [clustered, ce] = generate_outlier_pool(20, spec, rng);
  CHECK(clustered.size() == 20);
  CHECK(ce.rows() == 20);
  clustered.validate();
}

TEST_CASE("dataset jsonl round trip") {
  auto dir = testing::temp_dir("corpus_jsonl");
  Dataset d;
  d.rows.push_back(testing::row("a", "greet", "hello there"));
  d.rows.push_back({"b", "caf\xc3\xa9 \"quoted\"", std::nullopt, false});
  d.rows.push_back({"c", "noise", std::nullopt, true});
  write_dataset_jsonl(dir / "d.jsonl", d);
  CHECK(read_dataset_jsonl(dir / "d.jsonl") == d);
  CHECK_THROWS_AS(to_labeled(d), DataError);
}

TEST_CASE("dataset jsonl rejects malformed input") {
  auto dir = testing::temp_dir("corpus_bad");
  auto write = [&](const std::string& body) {
    write_file_atomic(dir / "x.jsonl", body);
    return dir / "x.jsonl";
  };
  CHECK_THROWS_AS(read_dataset_jsonl(write("{\"id\": \"a\"}\n")), DataError);
  CHECK_THROWS_AS(read_dataset_jsonl(write("not json\n")), DataError);
  CHECK_THROWS_AS(read_dataset_jsonl(write("{\"id\":\"a\",\"text\":\"t\"}\n{\"id\":\"a\",\"text\":\"u\"}\n")), DataError);
  CHECK_THROWS_AS(read_dataset_jsonl(write("{\"id\":\"a\",\"text\":\"t\",\"intent\":\"x\",\"outlier\":true}\n")),
                  DataError);
  CHECK_THROWS_AS(read_dataset_jsonl(dir / "missing.jsonl"), DataError);
}

}  // TEST_SUITE
