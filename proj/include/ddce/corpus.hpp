#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ddce/embedding.hpp"
#include "ddce/random.hpp"

namespace ddce {

struct Utterance {
  std::string id;
  std::string text;
  std::optional<std::string> intent;
  // Ground truth only: set for rows injected from an outlier source.
  bool is_injected_outlier = false;

  bool operator==(const Utterance&) const = default;
};

// Rows with or without intents. Ids are unique.
struct Dataset {
  std::vector<Utterance> rows;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
  std::vector<std::string> ids() const;
  std::vector<std::string> texts() const;

  // True when every row carries either an intent or the outlier flag.
  bool has_ground_truth() const;

  // Throws DataError on duplicate ids or an outlier row that still has an intent.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

// A dataset in which every row has an intent. The sorted distinct intent list
// is cached on construction.
class LabeledDataset {
 public:
  LabeledDataset() = default;
  explicit LabeledDataset(std::vector<Utterance> rows);

  const std::vector<Utterance>& rows() const { return rows_; }
  const std::vector<std::string>& intents() const { return intents_; }
  std::size_t num_intents() const { return intents_.size(); }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }

  std::vector<std::string> texts() const;
  std::vector<std::string> labels() const;
  Dataset as_dataset() const { return Dataset{rows_}; }

  // Rows whose intent is in `keep` (order preserved).
  LabeledDataset restrict_to(const std::vector<std::string>& keep) const;

  bool operator==(const LabeledDataset&) const = default;

 private:
  std::vector<Utterance> rows_;
  std::vector<std::string> intents_;
};

struct IntentDisjointSplit {
  LabeledDataset rl;  // encoder training side
  LabeledDataset hs;  // hyperparameter search side
  double alpha = 0.5;
};

// round-half-up of alpha * O, clamped to [1, O - 1].
std::size_t heldout_intent_count(std::size_t num_intents, double alpha);

IntentDisjointSplit split_by_intents(const LabeledDataset& d, double alpha, Rng& rng);

// Stratified holdout: round-half-up(fraction * count) rows of each intent go
// to the second element, clamped so both sides keep every intent.
std::pair<LabeledDataset, LabeledDataset> inner_split(const LabeledDataset& d,
                                                      double holdout_fraction, Rng& rng);

std::size_t injected_count(std::size_t size, double ratio);

// Appends round(ratio * |d|) rows drawn without replacement from `source`,
// flagged as injected outliers with their intent cleared.
Dataset inject_outliers(const Dataset& d, const Dataset& source, double ratio, Rng& rng);

// Keeps at most `max_per_intent` rows per intent (0 keeps everything).
LabeledDataset cap_per_intent(const LabeledDataset& d, std::size_t max_per_intent, Rng& rng);

struct SyntheticSpec {
  std::size_t n_intents = 10;
  std::size_t rows_per_intent = 30;
  std::size_t dim = 16;
  double blob_sigma = 0.1;

  // Text side. Each intent owns `keywords_per_intent` tokens; an utterance
  // draws `keywords_per_row` of them plus `filler_per_row` tokens from a
  // vocabulary shared by every intent.
  std::size_t keywords_per_intent = 8;
  std::size_t keywords_per_row = 3;
  std::size_t filler_vocab = 30;
  std::size_t filler_per_row = 3;
  // Probability that a keyword slot is borrowed from a random other intent.
  double borrow_prob = 0.0;

  // Namespaces ids, intent names and keyword tokens so that independently
  // generated datasets never collide.
  std::string prefix = "syn";
};

struct SyntheticData {
  LabeledDataset labeled;
  // Gaussian blob embedding per row, aligned with labeled.rows().
  EmbeddingMatrix oracle;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec, Rng& rng);

// A foreign corpus: ceil(n / rows_per_intent) intents of the given shape in
// their own token namespace, truncated to n rows. Intents are cleared.
// rows_per_intent = 1 gives isolated outliers.
std::pair<Dataset, EmbeddingMatrix> generate_outlier_pool(std::size_t n, const SyntheticSpec& spec,
                                                          Rng& rng);

// JSONL: {"id": str, "text": str, "intent": str|null, "outlier": bool}
Dataset read_dataset_jsonl(const std::filesystem::path& path);
void write_dataset_jsonl(const std::filesystem::path& path, const Dataset& d);

// Throws DataError if some row lacks an intent.
LabeledDataset to_labeled(const Dataset& d);

}  // namespace ddce
