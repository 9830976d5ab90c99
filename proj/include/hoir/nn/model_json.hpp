#pragma once

#include <json.hpp>

#include "hoir/nn/model.hpp"

namespace hoir::nn {

// Round-trippable JSON form of a ModelConfig (the checkpoint descriptor and
// the "model" section of experiment configs). Parsing is strict: unknown
// keys raise ConfigError. Missing keys keep the struct defaults.
nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace hoir::nn
