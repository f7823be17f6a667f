#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ddce/corpus.hpp"
#include "ddce/embedding.hpp"
#include "ddce/random.hpp"

namespace testing {

inline ddce::Utterance row(std::string id, std::string intent, std::string text = "") {
  return ddce::Utterance{std::move(id), text.empty() ? "text " + intent : std::move(text), std::move(intent), false};
}

// `per_intent` rows for each of `intents` intents named "i0", "i1", ...
inline ddce::LabeledDataset toy_labeled(std::size_t intents, std::size_t per_intent) {
  std::vector<ddce::Utterance> rows;
  for (std::size_t c = 0; c < intents; ++c)
    for (std::size_t j = 0; j < per_intent; ++j)
      rows.push_back(row("r" + std::to_string(c) + "_" + std::to_string(j), "i" + std::to_string(c)));
  return ddce::LabeledDataset(std::move(rows));
}

inline ddce::Dataset outlier_pool(std::size_t n, const std::string& prefix = "o") {
  ddce::Dataset d;
  for (std::size_t i = 0; i < n; ++i) d.rows.push_back({prefix + std::to_string(i), "junk " + std::to_string(i), std::nullopt, false});
  return d;
}

// Gaussian blobs in `dim` dimensions; labels[i] is the blob of row i.
struct Blobs {
  ddce::EmbeddingMatrix x;
  std::vector<int> labels;
};

inline Blobs blobs(const std::vector<std::vector<double>>& centers, std::size_t per_blob, double sigma,
                   std::uint64_t seed) {
  ddce::Rng rng = ddce::derive_stream(seed, {7});
  const std::size_t dim = centers.front().size();
  Blobs b{ddce::EmbeddingMatrix(centers.size() * per_blob, dim), {}};
  std::size_t r = 0;
  for (std::size_t c = 0; c < centers.size(); ++c)
    for (std::size_t j = 0; j < per_blob; ++j, ++r) {
      for (std::size_t k = 0; k < dim; ++k) b.x(r, k) = centers[c][k] + sigma * ddce::standard_normal(rng);
      b.x.ids()[r] = std::to_string(r);
      b.labels.push_back(static_cast<int>(c));
    }
  return b;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("ddce_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing
