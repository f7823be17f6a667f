#pragma once

#include <filesystem>

#include <json.hpp>

#include "ddce/pipeline.hpp"

namespace ddce {

// Keys mirror PipelineConfig field names; nested objects for search_space and
// train_cfg. Missing keys keep their defaults, unknown keys are rejected.
PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const PipelineConfig& cfg);

PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace ddce
