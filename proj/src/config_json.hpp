#pragma once

#include <json.hpp>

#include "zscore/run_config.hpp"

namespace zscore::json_io {

nlohmann::json to_json(const BlueprintConfig& cfg);
nlohmann::json to_json(const ModelConfig& cfg);
nlohmann::json to_json(const TrainConfig& cfg);

void merge(BlueprintConfig& cfg, const nlohmann::json& j);
void merge(ModelConfig& cfg, const nlohmann::json& j);
void merge(TrainConfig& cfg, const nlohmann::json& j);

}  // namespace zscore::json_io
