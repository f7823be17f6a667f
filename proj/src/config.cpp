#include "ddce/config.hpp"

#include <set>
#include <type_traits>

#include "ddce/error.hpp"
#include "ddce/io.hpp"

namespace ddce {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw UsageError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw UsageError("unknown config key '" + where + key + "'");
}

// nlohmann converts between number kinds silently; counts must be
// non-negative integers and reals any number.
template <typename T>
bool kind_matches(const json& v) {
  if constexpr (std::is_same_v<T, std::string>) return v.is_string();
  else if constexpr (std::is_floating_point_v<T>) return v.is_number();
  else return v.is_number_unsigned();
}

template <typename T>
T get_checked(const json& v, const std::string& where, const char* key) {
  if (!kind_matches<T>(v)) throw UsageError("config key '" + where + key + "' has the wrong type");
  return v.get<T>();
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  out = get_checked<T>(j.at(key), where, key);
}

template <typename T>
void read_range(const json& j, const char* key, std::pair<T, T>& out, const std::string& where) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2) throw UsageError("config key '" + where + key + "' must be [lo, hi]");
  out = {get_checked<T>(v[0], where, key), get_checked<T>(v[1], where, key)};
}

}  // namespace

PipelineConfig config_from_json(const json& j) {
  PipelineConfig cfg;
  reject_unknown(j,
                 {"k_models", "alpha", "s_min", "search_space", "consensus_fn", "train_cfg", "metric",
                  "outlier_ratio", "master_seed", "max_per_intent"},
                 "");
  read(j, "k_models", cfg.k_models, "");
  read(j, "alpha", cfg.alpha, "");
  read(j, "s_min", cfg.s_min, "");
  read(j, "outlier_ratio", cfg.outlier_ratio, "");
  read(j, "master_seed", cfg.master_seed, "");
  read(j, "max_per_intent", cfg.max_per_intent, "");
  if (j.contains("consensus_fn")) {
    std::string s;
    read(j, "consensus_fn", s, "");
    cfg.consensus_fn = parse_consensus_fn(s);
  }
  if (j.contains("metric")) {
    std::string s;
    read(j, "metric", s, "");
    cfg.metric = parse_metric(s);
  }
  if (j.contains("search_space")) {
    const auto& s = j.at("search_space");
    const std::string w = "search_space.";
    reject_unknown(s, {"max_eps_range", "xi_range", "min_samples_range", "n_trials"}, w);
    read_range(s, "max_eps_range", cfg.search_space.max_eps_range, w);
    read_range(s, "xi_range", cfg.search_space.xi_range, w);
    read_range(s, "min_samples_range", cfg.search_space.min_samples_range, w);
    read(s, "n_trials", cfg.search_space.n_trials, w);
  }
  if (j.contains("train_cfg")) {
    const auto& t = j.at("train_cfg");
    const std::string w = "train_cfg.";
    reject_unknown(t, {"learning_rate", "epochs", "batch_size", "hidden_dim", "feature_dim", "seed"}, w);
    read(t, "learning_rate", cfg.train_cfg.learning_rate, w);
    read(t, "epochs", cfg.train_cfg.epochs, w);
    read(t, "batch_size", cfg.train_cfg.batch_size, w);
    read(t, "hidden_dim", cfg.train_cfg.hidden_dim, w);
    read(t, "feature_dim", cfg.train_cfg.feature_dim, w);
    read(t, "seed", cfg.train_cfg.seed, w);
  }
  cfg.validate();
  return cfg;
}

json config_to_json(const PipelineConfig& cfg) {
  const auto& s = cfg.search_space;
  const auto& t = cfg.train_cfg;
  return {
      {"k_models", cfg.k_models},
      {"alpha", cfg.alpha},
      {"s_min", cfg.s_min},
      {"search_space",
       {{"max_eps_range", {s.max_eps_range.first, s.max_eps_range.second}},
        {"xi_range", {s.xi_range.first, s.xi_range.second}},
        {"min_samples_range", {s.min_samples_range.first, s.min_samples_range.second}},
        {"n_trials", s.n_trials}}},
      {"consensus_fn", to_string(cfg.consensus_fn)},
      {"train_cfg",
       {{"learning_rate", t.learning_rate},
        {"epochs", t.epochs},
        {"batch_size", t.batch_size},
        {"hidden_dim", t.hidden_dim},
        {"feature_dim", t.feature_dim},
        {"seed", t.seed}}},
      {"metric", to_string(cfg.metric)},
      {"outlier_ratio", cfg.outlier_ratio},
      {"master_seed", cfg.master_seed},
      {"max_per_intent", cfg.max_per_intent},
  };
}

PipelineConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw UsageError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

}  // namespace ddce
