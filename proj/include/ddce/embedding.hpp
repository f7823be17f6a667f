#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ddce {

// Dense row-major matrix of utterance representations, one row per id.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t cols);
  EmbeddingMatrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                  std::vector<std::string> ids);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  const std::vector<double>& data() const { return data_; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::vector<std::string>& ids() { return ids_; }

  // Scales every nonzero row to unit L2 norm; zero rows stay zero.
  void normalize_rows();

  // Rows in the given order.
  EmbeddingMatrix select(std::span<const std::size_t> indices) const;

  // Rows matching `ids`, looked up by id. Throws DataError on a missing id.
  EmbeddingMatrix select_ids(const std::vector<std::string>& ids) const;

  bool all_finite() const;

  bool operator==(const EmbeddingMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
  std::vector<std::string> ids_;
};

// Stacks rows of `a` on top of rows of `b`. Column counts must agree.
EmbeddingMatrix vstack(const EmbeddingMatrix& a, const EmbeddingMatrix& b);

// EMB1 binary format:
//   "EMB1" | u32 rows | u32 dim | rows x (u16 id_len, id bytes) | rows*dim f32
// All integers and floats little-endian.
EmbeddingMatrix load_precomputed(const std::filesystem::path& path);
EmbeddingMatrix parse_emb1(std::span<const unsigned char> bytes);
std::vector<unsigned char> serialize_emb1(const EmbeddingMatrix& m);
void save_precomputed(const std::filesystem::path& path, const EmbeddingMatrix& m);

}  // namespace ddce
