#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ddce/corpus.hpp"
#include "ddce/embedding.hpp"
#include "ddce/random.hpp"

namespace ddce {

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  std::size_t hidden_dim = 64;
  std::size_t feature_dim = 1024;
  std::uint64_t seed = 0;
};

// One-hidden-layer softmax classifier over hashed TF-IDF features. The hidden
// activations tanh(x W + b) are the utterance representation.
struct EncoderModel {
  std::size_t feature_dim = 0;
  std::size_t hidden_dim = 0;
  std::vector<std::string> class_labels;
  std::vector<double> W;  // feature_dim x hidden_dim, row-major
  std::vector<double> b;  // hidden_dim
  std::vector<double> U;  // hidden_dim x classes, row-major
  std::vector<double> c;  // classes

  std::size_t num_classes() const { return class_labels.size(); }
  bool all_finite() const;
  bool operator==(const EncoderModel&) const = default;
};

// 64-bit FNV-1a. Token hashes feed the feature index, so this must never change.
std::uint64_t stable_hash(std::string_view s);

std::vector<std::string_view> tokenize(std::string_view text);

// Hashed bag-of-tokens with smoothed TF-IDF weights fitted on `texts`
// (idf = ln((1 + n) / (1 + df)) + 1); rows L2-normalized, empty text gives a
// zero row. Row ids are the decimal row indices.
EmbeddingMatrix featurize(const std::vector<std::string>& texts, std::size_t feature_dim);

EncoderModel init_encoder(std::size_t feature_dim, std::size_t hidden_dim,
                          std::vector<std::string> class_labels, Rng& rng);

struct EncoderGradients {
  std::vector<double> W, b, U, c;
};

// Mean cross-entropy over the rows of `x`; fills `grad` when non-null.
double loss_and_gradient(const EncoderModel& model, const EmbeddingMatrix& x,
                         std::span<const std::size_t> targets, EncoderGradients* grad);

std::vector<std::size_t> predict(const EncoderModel& model, const EmbeddingMatrix& x);

struct TrainResult {
  EncoderModel model;
  double val_accuracy = 0.0;
  std::size_t best_epoch = 0;           // 0 means the initialization was kept
  std::vector<double> epoch_train_loss;  // full-pass loss after each epoch
};

// Mini-batch SGD on mean cross-entropy. Keeps the epoch snapshot with the best
// validation accuracy, earliest epoch on ties.
TrainResult train_encoder(const LabeledDataset& train, const LabeledDataset& val,
                          const TrainConfig& cfg);

// Hidden activations for each text, L2-normalized. When `ids` is empty the
// rows get their decimal indices as ids.
EmbeddingMatrix encode(const EncoderModel& model, const std::vector<std::string>& texts,
                       std::vector<std::string> ids = {});

EmbeddingMatrix encode(const EncoderModel& model, const Dataset& d);

}  // namespace ddce
