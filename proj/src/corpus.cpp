#include "ddce/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "ddce/error.hpp"
#include "ddce/io.hpp"

namespace ddce {

namespace {

std::size_t round_half_up(double x) {
  return static_cast<std::size_t>(std::floor(x + 0.5));
}

}  // namespace

std::vector<std::string> Dataset::ids() const {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.id);
  return out;
}

std::vector<std::string> Dataset::texts() const {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.text);
  return out;
}

bool Dataset::has_ground_truth() const {
  return std::all_of(rows.begin(), rows.end(),
                     [](const Utterance& u) { return u.intent || u.is_injected_outlier; });
}

void Dataset::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& r : rows) {
    if (!seen.insert(r.id).second) throw DataError("duplicate id: " + r.id);
    if (r.is_injected_outlier && r.intent)
      throw DataError("row " + r.id + " is flagged as outlier but has an intent");
  }
}

LabeledDataset::LabeledDataset(std::vector<Utterance> rows) : rows_(std::move(rows)) {
  std::set<std::string> intents;
  std::unordered_set<std::string> seen;
  for (const auto& r : rows_) {
    if (!r.intent) throw DataError("row " + r.id + " has no intent in a labeled dataset");
    if (!seen.insert(r.id).second) throw DataError("duplicate id: " + r.id);
    intents.insert(*r.intent);
  }
  intents_.assign(intents.begin(), intents.end());
}

std::vector<std::string> LabeledDataset::texts() const {
  std::vector<std::string> out;
  out.reserve(rows_.size());
  for (const auto& r : rows_) out.push_back(r.text);
  return out;
}

std::vector<std::string> LabeledDataset::labels() const {
  std::vector<std::string> out;
  out.reserve(rows_.size());
  for (const auto& r : rows_) out.push_back(*r.intent);
  return out;
}

LabeledDataset LabeledDataset::restrict_to(const std::vector<std::string>& keep) const {
  std::set<std::string> k(keep.begin(), keep.end());
  std::vector<Utterance> out;
  for (const auto& r : rows_)
    if (k.count(*r.intent)) out.push_back(r);
  return LabeledDataset(std::move(out));
}

std::size_t heldout_intent_count(std::size_t num_intents, double alpha) {
  if (num_intents < 2) throw UnsplittableDatasetError("need at least 2 intents to split, got " +
                                                      std::to_string(num_intents));
  auto h = round_half_up(alpha * static_cast<double>(num_intents));
  return std::clamp<std::size_t>(h, 1, num_intents - 1);
}

IntentDisjointSplit split_by_intents(const LabeledDataset& d, double alpha, Rng& rng) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
  const auto& intents = d.intents();
  const auto h = heldout_intent_count(intents.size(), alpha);
  auto picked = sample_without_replacement(intents.size(), h, rng);
  std::vector<bool> is_hs(intents.size(), false);
  for (auto i : picked) is_hs[i] = true;
  std::vector<std::string> hs, rl;
  for (std::size_t i = 0; i < intents.size(); ++i) (is_hs[i] ? hs : rl).push_back(intents[i]);
  return {d.restrict_to(rl), d.restrict_to(hs), alpha};
}

std::pair<LabeledDataset, LabeledDataset> inner_split(const LabeledDataset& d,
                                                      double holdout_fraction, Rng& rng) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
    throw UsageError("holdout fraction must lie in (0, 1)");
  std::map<std::string, std::vector<std::size_t>> by_intent;
  for (std::size_t i = 0; i < d.size(); ++i) by_intent[*d.rows()[i].intent].push_back(i);

  std::vector<bool> to_val(d.size(), false);
  for (auto& [intent, idx] : by_intent) {
    if (idx.size() < 2)
      throw StratificationError("intent '" + intent + "' has a single example");
    auto k = round_half_up(holdout_fraction * static_cast<double>(idx.size()));
    k = std::clamp<std::size_t>(k, 1, idx.size() - 1);
    shuffle(idx, rng);
    for (std::size_t j = 0; j < k; ++j) to_val[idx[j]] = true;
  }
  std::vector<Utterance> train, val;
  for (std::size_t i = 0; i < d.size(); ++i) (to_val[i] ? val : train).push_back(d.rows()[i]);
  return {LabeledDataset(std::move(train)), LabeledDataset(std::move(val))};
}

std::size_t injected_count(std::size_t size, double ratio) {
  if (!(ratio >= 0.0) || !std::isfinite(ratio)) throw UsageError("outlier ratio must be >= 0");
  return round_half_up(ratio * static_cast<double>(size));
}

Dataset inject_outliers(const Dataset& d, const Dataset& source, double ratio, Rng& rng) {
  const auto need = injected_count(d.size(), ratio);
  if (need > source.size()) throw InsufficientSourceError(need, source.size());
  Dataset out = d;
  if (need == 0) return out;
  std::unordered_set<std::string> ids;
  for (const auto& r : d.rows) ids.insert(r.id);
  out.rows.reserve(d.size() + need);
  for (auto i : sample_without_replacement(source.size(), need, rng)) {
    Utterance u = source.rows[i];
    if (!ids.insert(u.id).second) throw DataError("injected id collides with dataset: " + u.id);
    u.intent.reset();
    u.is_injected_outlier = true;
    out.rows.push_back(std::move(u));
  }
  return out;
}

LabeledDataset cap_per_intent(const LabeledDataset& d, std::size_t max_per_intent, Rng& rng) {
  if (max_per_intent == 0) return d;
  std::map<std::string, std::vector<std::size_t>> by_intent;
  for (std::size_t i = 0; i < d.size(); ++i) by_intent[*d.rows()[i].intent].push_back(i);
  std::vector<bool> keep(d.size(), false);
  for (auto& [intent, idx] : by_intent) {
    if (idx.size() <= max_per_intent) {
      for (auto i : idx) keep[i] = true;
      continue;
    }
    for (auto j : sample_without_replacement(idx.size(), max_per_intent, rng)) keep[idx[j]] = true;
  }
  std::vector<Utterance> rows;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (keep[i]) rows.push_back(d.rows()[i]);
  return LabeledDataset(std::move(rows));
}

namespace {

std::vector<double> random_unit_vector(std::size_t dim, Rng& rng) {
  std::vector<double> v(dim);
  double norm = 0.0;
  while (norm == 0.0) {
    norm = 0.0;
    for (auto& x : v) {
      x = standard_normal(rng);
      norm += x * x;
    }
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

std::string keyword(const SyntheticSpec& spec, std::size_t intent, std::size_t j) {
  return spec.prefix + "-intent-" + std::to_string(intent) + "-token-" + std::to_string(j);
}

std::string make_text(const SyntheticSpec& spec, std::size_t intent, Rng& rng) {
  std::vector<std::string> tokens;
  for (std::size_t j = 0; j < spec.keywords_per_row; ++j) {
    std::size_t owner = intent;
    if (spec.n_intents > 1 && spec.borrow_prob > 0.0 && uniform01(rng) < spec.borrow_prob) {
      owner = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(spec.n_intents) - 2));
      if (owner >= intent) ++owner;
    }
    auto w = static_cast<std::size_t>(
        uniform_int(rng, 0, static_cast<std::int64_t>(spec.keywords_per_intent) - 1));
    tokens.push_back(keyword(spec, owner, w));
  }
  for (std::size_t j = 0; j < spec.filler_per_row && spec.filler_vocab > 0; ++j) {
    auto w = uniform_int(rng, 0, static_cast<std::int64_t>(spec.filler_vocab) - 1);
    tokens.push_back("token-" + std::to_string(w));
  }
  shuffle(tokens, rng);
  std::string text;
  for (const auto& t : tokens) {
    if (!text.empty()) text += ' ';
    text += t;
  }
  return text;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec, Rng& rng) {
  if (spec.n_intents < 1 || spec.rows_per_intent < 1 || spec.dim < 1 ||
      spec.keywords_per_intent < 1)
    throw UsageError("synthetic counts must be >= 1");
  const std::size_t n = spec.n_intents * spec.rows_per_intent;
  std::vector<std::vector<double>> centers;
  centers.reserve(spec.n_intents);
  for (std::size_t c = 0; c < spec.n_intents; ++c) centers.push_back(random_unit_vector(spec.dim, rng));

  std::vector<Utterance> rows;
  rows.reserve(n);
  EmbeddingMatrix oracle(n, spec.dim);
  std::size_t r = 0;
  for (std::size_t c = 0; c < spec.n_intents; ++c) {
    for (std::size_t j = 0; j < spec.rows_per_intent; ++j, ++r) {
      Utterance u;
      u.id = spec.prefix + "-" + std::to_string(c) + "-" + std::to_string(j);
      u.intent = spec.prefix + "-intent-" + std::to_string(c);
      u.text = make_text(spec, c, rng);
      rows.push_back(std::move(u));
      auto row = oracle.row(r);
      for (std::size_t k = 0; k < spec.dim; ++k)
        row[k] = centers[c][k] + (spec.blob_sigma > 0.0 ? spec.blob_sigma * standard_normal(rng) : 0.0);
      oracle.ids()[r] = rows.back().id;
    }
  }
  return {LabeledDataset(std::move(rows)), std::move(oracle)};
}

std::pair<Dataset, EmbeddingMatrix> generate_outlier_pool(std::size_t n, const SyntheticSpec& spec,
                                                          Rng& rng) {
  SyntheticSpec s = spec;
  s.rows_per_intent = std::max<std::size_t>(spec.rows_per_intent, 1);
  s.n_intents = std::max<std::size_t>((n + s.rows_per_intent - 1) / s.rows_per_intent, 1);
  auto syn = generate_synthetic(s, rng);
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    Utterance u = syn.labeled.rows()[i];
    u.intent.reset();
    d.rows.push_back(std::move(u));
  }
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return {std::move(d), syn.oracle.select(idx)};
}

Dataset read_dataset_jsonl(const std::filesystem::path& path) {
  using nlohmann::json;
  Dataset d;
  auto lines = split_lines(read_text_file(path));
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    json j;
    try {
      j = json::parse(lines[ln]);
    } catch (const json::parse_error& e) {
      throw DataError(path.string() + ":" + std::to_string(ln + 1) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("text") ||
        !j["text"].is_string())
      throw DataError(path.string() + ":" + std::to_string(ln + 1) + ": expected id and text strings");
    Utterance u;
    u.id = j["id"].get<std::string>();
    u.text = j["text"].get<std::string>();
    if (j.contains("intent") && !j["intent"].is_null()) {
      if (!j["intent"].is_string())
        throw DataError(path.string() + ":" + std::to_string(ln + 1) + ": intent must be a string or null");
      u.intent = j["intent"].get<std::string>();
    }
    if (j.contains("outlier")) {
      if (!j["outlier"].is_boolean())
        throw DataError(path.string() + ":" + std::to_string(ln + 1) + ": outlier must be a boolean");
      u.is_injected_outlier = j["outlier"].get<bool>();
    }
    d.rows.push_back(std::move(u));
  }
  d.validate();
  return d;
}

void write_dataset_jsonl(const std::filesystem::path& path, const Dataset& d) {
  using nlohmann::json;
  std::string out;
  for (const auto& r : d.rows) {
    json j;
    j["id"] = r.id;
    j["text"] = r.text;
    j["intent"] = r.intent ? json(*r.intent) : json(nullptr);
    if (r.is_injected_outlier) j["outlier"] = true;
    out += j.dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

LabeledDataset to_labeled(const Dataset& d) { return LabeledDataset(d.rows); }

}  // namespace ddce
