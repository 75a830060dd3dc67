#pragma once

#include <filesystem>
#include <json.hpp>

#include "edgeadain/edge.hpp"
#include "edgeadain/postprocess.hpp"
#include "edgeadain/preprocess.hpp"
#include "edgeadain/stylenet.hpp"
#include "edgeadain/trainer.hpp"

namespace edgeadain {

/// Every tunable of the pipeline in one place. Loaded from JSON, then overridden by CLI flags.
struct RunConfig {
  PreprocessConfig preprocess;
  EdgeProviderConfig edge;
  bool edge_on_raw = false;  // edges from the raw input instead of the preprocessed one
  StylizeConfig stylize;
  PostConfig post;
  TrainConfig train;
  std::filesystem::path weights;
  std::filesystem::path style;
};

nlohmann::json to_json(const RunConfig& cfg);
nlohmann::json to_json(const TrainConfig& cfg);

/// Applies the keys present in `j` on top of `cfg`. Unknown keys are an error.
void apply_json(const nlohmann::json& j, RunConfig& cfg);
void apply_json(const nlohmann::json& j, TrainConfig& cfg);

RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace edgeadain
