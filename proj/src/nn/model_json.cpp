#include "hoir/nn/model_json.hpp"

#include <set>

namespace hoir::nn {

using nlohmann::json;

json model_config_to_json(const ModelConfig& cfg) {
  return json{{"arch", architecture_name(cfg.arch)},
              {"image_size", cfg.image_size},
              {"features", cfg.features},
              {"stem_channels", cfg.stem_channels},
              {"hourglass_depth", cfg.hourglass_depth},
              {"stacks", cfg.stacks},
              {"heads", cfg.heads},
              {"mlp_hidden", cfg.mlp_hidden},
              {"mlp_skips", cfg.mlp_skips},
              {"prior_tokens", cfg.prior_tokens},
              {"use_sn", cfg.use_sn},
              {"use_prior", cfg.use_prior},
              {"use_if", cfg.use_if},
              {"use_ih", cfg.use_ih},
              {"use_io", cfg.use_io}};
}

ModelConfig model_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  static const std::set<std::string> known = {
      "arch",   "image_size", "features",     "stem_channels", "hourglass_depth",
      "stacks", "heads",      "mlp_hidden",   "mlp_skips",     "prior_tokens",
      "use_sn", "use_prior",  "use_if",       "use_ih",        "use_io"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw ConfigError("unknown model config key: " + key);

  ModelConfig cfg;
  try {
    if (j.contains("arch")) cfg.arch = parse_architecture(j.at("arch").get<std::string>());
    if (j.contains("image_size")) cfg.image_size = j.at("image_size").get<int>();
    if (j.contains("features")) cfg.features = j.at("features").get<int>();
    if (j.contains("stem_channels")) cfg.stem_channels = j.at("stem_channels").get<int>();
    if (j.contains("hourglass_depth")) cfg.hourglass_depth = j.at("hourglass_depth").get<int>();
    if (j.contains("stacks")) cfg.stacks = j.at("stacks").get<int>();
    if (j.contains("heads")) cfg.heads = j.at("heads").get<int>();
    if (j.contains("mlp_hidden")) cfg.mlp_hidden = j.at("mlp_hidden").get<std::vector<int>>();
    if (j.contains("mlp_skips")) cfg.mlp_skips = j.at("mlp_skips").get<std::vector<int>>();
    if (j.contains("prior_tokens")) cfg.prior_tokens = j.at("prior_tokens").get<bool>();
    if (j.contains("use_sn")) cfg.use_sn = j.at("use_sn").get<bool>();
    if (j.contains("use_prior")) cfg.use_prior = j.at("use_prior").get<bool>();
    if (j.contains("use_if")) cfg.use_if = j.at("use_if").get<bool>();
    if (j.contains("use_ih")) cfg.use_ih = j.at("use_ih").get<bool>();
    if (j.contains("use_io")) cfg.use_io = j.at("use_io").get<bool>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad model config value: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace hoir::nn
