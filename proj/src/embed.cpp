#include "ddce/embed.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "ddce/error.hpp"
#include "ddce/io.hpp"

namespace ddce {

// ---------------------------------------------------------------------------
// EmbeddingMatrix

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0), ids_(rows) {}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                                 std::vector<std::string> ids)
    : rows_(rows), cols_(cols), data_(std::move(data)), ids_(std::move(ids)) {
  if (data_.size() != rows_ * cols_) throw LengthMismatchError("matrix data size mismatch");
  if (ids_.size() != rows_) throw LengthMismatchError("matrix id count mismatch");
}

void EmbeddingMatrix::normalize_rows() {
  for (std::size_t i = 0; i < rows_; ++i) {
    auto r = row(i);
    double s = 0.0;
    for (double v : r) s += v * v;
    if (s == 0.0) continue;
    s = std::sqrt(s);
    for (double& v : r) v /= s;
  }
}

EmbeddingMatrix EmbeddingMatrix::select(std::span<const std::size_t> indices) const {
  EmbeddingMatrix out(indices.size(), cols_);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    auto src = row(indices[k]);
    std::copy(src.begin(), src.end(), out.row(k).begin());
    out.ids_[k] = ids_[indices[k]];
  }
  return out;
}

EmbeddingMatrix EmbeddingMatrix::select_ids(const std::vector<std::string>& ids) const {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(rows_);
  for (std::size_t i = 0; i < rows_; ++i) index.emplace(ids_[i], i);
  std::vector<std::size_t> pick;
  pick.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) throw DataError("no embedding for id '" + id + "'");
    pick.push_back(it->second);
  }
  return select(pick);
}

bool EmbeddingMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

EmbeddingMatrix vstack(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.cols() != b.cols()) throw LengthMismatchError("vstack: column counts differ");
  std::vector<double> data = a.data();
  data.insert(data.end(), b.data().begin(), b.data().end());
  std::vector<std::string> ids = a.ids();
  ids.insert(ids.end(), b.ids().begin(), b.ids().end());
  return EmbeddingMatrix(a.rows() + b.rows(), a.cols(), std::move(data), std::move(ids));
}

// ---------------------------------------------------------------------------
// EMB1

namespace {

constexpr unsigned char kMagic[4] = {'E', 'M', 'B', '1'};

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<unsigned char>((v >> s) & 0xff));
}

std::uint32_t get_u32(std::span<const unsigned char> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
         static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

}  // namespace

std::vector<unsigned char> serialize_emb1(const EmbeddingMatrix& m) {
  if (m.rows() > std::numeric_limits<std::uint32_t>::max() ||
      m.cols() > std::numeric_limits<std::uint32_t>::max())
    throw DataError("matrix too large for EMB1");
  std::vector<unsigned char> out(kMagic, kMagic + 4);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (const auto& id : m.ids()) {
    if (id.size() > std::numeric_limits<std::uint16_t>::max()) throw DataError("id too long for EMB1");
    put_u16(out, static_cast<std::uint16_t>(id.size()));
    out.insert(out.end(), id.begin(), id.end());
  }
  out.reserve(out.size() + m.data().size() * 4);
  for (double v : m.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

EmbeddingMatrix parse_emb1(std::span<const unsigned char> b) {
  if (b.size() < 4 || !std::equal(kMagic, kMagic + 4, b.begin()))
    throw FormatError("not an EMB1 file (bad magic)");
  if (b.size() < 12) throw TruncatedError("EMB1 header truncated");
  const std::size_t rows = get_u32(b, 4);
  const std::size_t dim = get_u32(b, 8);
  std::size_t at = 12;
  std::vector<std::string> ids;
  ids.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    if (at + 2 > b.size()) throw TruncatedError("EMB1 id table truncated");
    std::size_t len = static_cast<std::size_t>(b[at]) | static_cast<std::size_t>(b[at + 1]) << 8;
    at += 2;
    if (at + len > b.size()) throw TruncatedError("EMB1 id table truncated");
    ids.emplace_back(reinterpret_cast<const char*>(b.data() + at), len);
    at += len;
  }
  const std::size_t payload = rows * dim * 4;
  if (b.size() - at < payload)
    throw TruncatedError("EMB1 payload truncated: expected " + std::to_string(payload) +
                         " bytes, found " + std::to_string(b.size() - at));
  if (b.size() - at > payload) throw FormatError("EMB1 has trailing bytes");
  std::vector<double> data(rows * dim);
  for (std::size_t k = 0; k < data.size(); ++k, at += 4) {
    float f = std::bit_cast<float>(get_u32(b, at));
    if (!std::isfinite(f))
      throw NonFiniteError("EMB1 value at row " + std::to_string(k / std::max<std::size_t>(dim, 1)) +
                           " is not finite");
    data[k] = f;
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : ids)
    if (!seen.insert(id).second) throw DataError("EMB1 duplicate id: " + id);
  return EmbeddingMatrix(rows, dim, std::move(data), std::move(ids));
}

EmbeddingMatrix load_precomputed(const std::filesystem::path& path) {
  auto bytes = read_binary_file(path);
  return parse_emb1(bytes);
}

void save_precomputed(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  write_file_atomic(path, serialize_emb1(m));
}

// ---------------------------------------------------------------------------
// Features

std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::vector<std::string_view> tokenize(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

EmbeddingMatrix featurize(const std::vector<std::string>& texts, std::size_t feature_dim) {
  if (feature_dim < 16) throw UsageError("feature_dim must be >= 16");
  const std::size_t n = texts.size();
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = std::to_string(i);
  EmbeddingMatrix x(n, feature_dim, std::vector<double>(n * feature_dim, 0.0), std::move(ids));

  std::vector<double> df(feature_dim, 0.0);
  std::vector<std::size_t> touched;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = x.row(i);
    touched.clear();
    for (auto tok : tokenize(texts[i])) {
      auto f = static_cast<std::size_t>(stable_hash(tok) % feature_dim);
      if (row[f] == 0.0) touched.push_back(f);
      row[f] += 1.0;
    }
    for (auto f : touched) df[f] += 1.0;
  }
  const double nn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = x.row(i);
    for (std::size_t f = 0; f < feature_dim; ++f)
      if (row[f] != 0.0) row[f] *= std::log((1.0 + nn) / (1.0 + df[f])) + 1.0;
  }
  x.normalize_rows();
  return x;
}

// ---------------------------------------------------------------------------
// Encoder

bool EncoderModel::all_finite() const {
  auto ok = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  return ok(W) && ok(b) && ok(U) && ok(c);
}

EncoderModel init_encoder(std::size_t feature_dim, std::size_t hidden_dim,
                          std::vector<std::string> class_labels, Rng& rng) {
  if (hidden_dim < 1) throw UsageError("hidden_dim must be >= 1");
  if (class_labels.empty()) throw DataError("encoder needs at least one class");
  EncoderModel m;
  m.feature_dim = feature_dim;
  m.hidden_dim = hidden_dim;
  m.class_labels = std::move(class_labels);
  const std::size_t C = m.class_labels.size();
  // Inputs are unit-norm rows, so W's spread sets the pre-activation scale directly.
  const double w_lim = std::sqrt(3.0) * 0.5;
  const double u_lim = std::sqrt(6.0 / static_cast<double>(hidden_dim + C));
  m.W.resize(feature_dim * hidden_dim);
  for (auto& v : m.W) v = (2.0 * uniform01(rng) - 1.0) * w_lim;
  m.b.assign(hidden_dim, 0.0);
  m.U.resize(hidden_dim * C);
  for (auto& v : m.U) v = (2.0 * uniform01(rng) - 1.0) * u_lim;
  m.c.assign(C, 0.0);
  return m;
}

namespace {

struct SparseRow {
  std::vector<std::size_t> idx;
  std::vector<double> val;
};

std::vector<SparseRow> to_sparse(const EmbeddingMatrix& x) {
  std::vector<SparseRow> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    for (std::size_t f = 0; f < r.size(); ++f)
      if (r[f] != 0.0) {
        out[i].idx.push_back(f);
        out[i].val.push_back(r[f]);
      }
  }
  return out;
}

void hidden(const EncoderModel& m, const SparseRow& x, std::span<double> h) {
  const std::size_t H = m.hidden_dim;
  std::copy(m.b.begin(), m.b.end(), h.begin());
  for (std::size_t k = 0; k < x.idx.size(); ++k) {
    const double* w = m.W.data() + x.idx[k] * H;
    const double v = x.val[k];
    for (std::size_t j = 0; j < H; ++j) h[j] += v * w[j];
  }
  for (auto& v : h) v = std::tanh(v);
}

// Softmax probabilities in `p`; returns -log p[target].
double head(const EncoderModel& m, std::span<const double> h, std::span<double> p,
            std::size_t target) {
  const std::size_t H = m.hidden_dim, C = m.num_classes();
  for (std::size_t k = 0; k < C; ++k) p[k] = m.c[k];
  for (std::size_t j = 0; j < H; ++j) {
    const double* u = m.U.data() + j * C;
    for (std::size_t k = 0; k < C; ++k) p[k] += h[j] * u[k];
  }
  const double mx = *std::max_element(p.begin(), p.end());
  double z = 0.0;
  for (auto& v : p) {
    v = std::exp(v - mx);
    z += v;
  }
  for (auto& v : p) v /= z;
  return target < C ? -std::log(std::max(p[target], std::numeric_limits<double>::min())) : 0.0;
}

// Accumulates the per-sample gradient scaled by `scale` into `g`. The dW
// contribution is written sparsely to the rows touched by `x`.
void backprop(const EncoderModel& m, const SparseRow& x, std::span<const double> h,
              std::span<const double> p, std::size_t target, double scale, EncoderGradients& g,
              std::vector<double>& da) {
  const std::size_t H = m.hidden_dim, C = m.num_classes();
  da.assign(H, 0.0);
  for (std::size_t j = 0; j < H; ++j) {
    const double* u = m.U.data() + j * C;
    double acc = 0.0;
    for (std::size_t k = 0; k < C; ++k) {
      const double dz = p[k] - (k == target ? 1.0 : 0.0);
      g.U[j * C + k] += scale * h[j] * dz;
      acc += dz * u[k];
    }
    da[j] = acc * (1.0 - h[j] * h[j]);
  }
  for (std::size_t k = 0; k < C; ++k) g.c[k] += scale * (p[k] - (k == target ? 1.0 : 0.0));
  for (std::size_t j = 0; j < H; ++j) g.b[j] += scale * da[j];
  for (std::size_t q = 0; q < x.idx.size(); ++q) {
    double* w = g.W.data() + x.idx[q] * H;
    const double v = scale * x.val[q];
    for (std::size_t j = 0; j < H; ++j) w[j] += v * da[j];
  }
}

EncoderGradients zero_gradients(const EncoderModel& m) {
  return {std::vector<double>(m.W.size(), 0.0), std::vector<double>(m.b.size(), 0.0),
          std::vector<double>(m.U.size(), 0.0), std::vector<double>(m.c.size(), 0.0)};
}

double mean_loss(const EncoderModel& m, const std::vector<SparseRow>& xs,
                 std::span<const std::size_t> targets) {
  if (xs.empty()) return 0.0;
  std::vector<double> h(m.hidden_dim), p(m.num_classes());
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    hidden(m, xs[i], h);
    total += head(m, h, p, targets[i]);
  }
  return total / static_cast<double>(xs.size());
}

std::vector<std::size_t> predict_sparse(const EncoderModel& m, const std::vector<SparseRow>& xs) {
  std::vector<double> h(m.hidden_dim), p(m.num_classes());
  std::vector<std::size_t> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    hidden(m, xs[i], h);
    head(m, h, p, m.num_classes());
    out[i] = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
  }
  return out;
}

double accuracy(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& truth) {
  if (truth.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += pred[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

std::vector<std::size_t> class_targets(const LabeledDataset& d,
                                       const std::vector<std::string>& classes,
                                       const char* which) {
  std::vector<std::size_t> t;
  t.reserve(d.size());
  for (const auto& r : d.rows()) {
    auto it = std::lower_bound(classes.begin(), classes.end(), *r.intent);
    if (it == classes.end() || *it != *r.intent)
      throw DataError(std::string(which) + " intent '" + *r.intent + "' is absent from training data");
    t.push_back(static_cast<std::size_t>(it - classes.begin()));
  }
  return t;
}

}  // namespace

double loss_and_gradient(const EncoderModel& model, const EmbeddingMatrix& x,
                         std::span<const std::size_t> targets, EncoderGradients* grad) {
  if (x.cols() != model.feature_dim) throw LengthMismatchError("feature dimension mismatch");
  if (targets.size() != x.rows()) throw LengthMismatchError("target count mismatch");
  auto xs = to_sparse(x);
  if (grad) *grad = zero_gradients(model);
  if (xs.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(xs.size());
  std::vector<double> h(model.hidden_dim), p(model.num_classes()), da;
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    hidden(model, xs[i], h);
    total += head(model, h, p, targets[i]);
    if (grad) backprop(model, xs[i], h, p, targets[i], scale, *grad, da);
  }
  return total * scale;
}

std::vector<std::size_t> predict(const EncoderModel& model, const EmbeddingMatrix& x) {
  if (x.cols() != model.feature_dim) throw LengthMismatchError("feature dimension mismatch");
  return predict_sparse(model, to_sparse(x));
}

TrainResult train_encoder(const LabeledDataset& train, const LabeledDataset& val,
                          const TrainConfig& cfg) {
  if (train.empty()) throw DataError("empty training set");
  if (cfg.batch_size < 1) throw UsageError("batch_size must be >= 1");
  const auto& classes = train.intents();
  const auto y_train = class_targets(train, classes, "training");
  const auto y_val = class_targets(val, classes, "validation");

  const auto x_train = to_sparse(featurize(train.texts(), cfg.feature_dim));
  const auto x_val = to_sparse(featurize(val.texts(), cfg.feature_dim));

  Rng rng = derive_stream(cfg.seed, {0x656e63ull});
  TrainResult result;
  result.model = init_encoder(cfg.feature_dim, cfg.hidden_dim, classes, rng);
  result.val_accuracy = accuracy(predict_sparse(result.model, x_val), y_val);
  result.best_epoch = 0;

  EncoderModel model = result.model;
  const std::size_t n = x_train.size(), H = model.hidden_dim, C = model.num_classes();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  EncoderGradients g = zero_gradients(model);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      std::fill(g.b.begin(), g.b.end(), 0.0);
      std::fill(g.U.begin(), g.U.end(), 0.0);
      std::fill(g.c.begin(), g.c.end(), 0.0);
      std::vector<double> h(H), p(C), da;
      for (std::size_t s = start; s < end; ++s) {
        const auto i = order[s];
        hidden(model, x_train[i], h);
        head(model, h, p, y_train[i]);
        backprop(model, x_train[i], h, p, y_train[i], scale, g, da);
      }
      const double lr = cfg.learning_rate;
      for (std::size_t k = 0; k < model.b.size(); ++k) model.b[k] -= lr * g.b[k];
      for (std::size_t k = 0; k < model.U.size(); ++k) model.U[k] -= lr * g.U[k];
      for (std::size_t k = 0; k < model.c.size(); ++k) model.c[k] -= lr * g.c[k];
      for (std::size_t s = start; s < end; ++s)
        for (auto f : x_train[order[s]].idx) {
          double* w = model.W.data() + f * H;
          double* gw = g.W.data() + f * H;
          for (std::size_t j = 0; j < H; ++j) {
            w[j] -= lr * gw[j];
            gw[j] = 0.0;  // a feature shared by several rows is applied once
          }
        }
    }
    result.epoch_train_loss.push_back(mean_loss(model, x_train, y_train));
    const double acc = accuracy(predict_sparse(model, x_val), y_val);
    if (epoch == 1 || acc > result.val_accuracy) {
      result.model = model;
      result.val_accuracy = acc;
      result.best_epoch = epoch;
    }
  }
  if (!result.model.all_finite()) throw DataError("encoder training diverged");
  return result;
}

EmbeddingMatrix encode(const EncoderModel& model, const std::vector<std::string>& texts,
                       std::vector<std::string> ids) {
  if (ids.empty()) {
    ids.resize(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) ids[i] = std::to_string(i);
  }
  if (ids.size() != texts.size()) throw LengthMismatchError("id count differs from text count");
  if (texts.empty()) return EmbeddingMatrix(0, model.hidden_dim);
  auto xs = to_sparse(featurize(texts, model.feature_dim));
  EmbeddingMatrix out(texts.size(), model.hidden_dim,
                      std::vector<double>(texts.size() * model.hidden_dim), std::move(ids));
  for (std::size_t i = 0; i < xs.size(); ++i) hidden(model, xs[i], out.row(i));
  out.normalize_rows();
  return out;
}

EmbeddingMatrix encode(const EncoderModel& model, const Dataset& d) {
  return encode(model, d.texts(), d.ids());
}

}  // namespace ddce
