#include "hoir/pipeline/config.hpp"

#include <fstream>
#include <set>

namespace hoir::pipeline {

using nlohmann::json;

namespace {

// Tracks which keys of one JSON object were consumed; flags the rest.
class StrictObject {
 public:
  StrictObject(const json& j, std::string section) : j_(j), section_(std::move(section)) {
    if (!j.is_object()) throw ConfigError("config: section '" + section_ + "' must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config: bad value for '" + section_ + "." + key + "': " + e.what());
    }
  }

  const json* sub(const std::string& key) {
    if (!has(key)) return nullptr;
    return &j_.at(key);
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key()))
        throw ConfigError("config: unknown key '" + item.key() + "' in section '" + section_ +
                          "'");
  }

 private:
  const json& j_;
  std::string section_;
  std::set<std::string> seen_;
};

DataConfig data_from_json(const json& j) {
  DataConfig d;
  StrictObject o(j, "data");
  o.get("n_scenes", d.n_scenes);
  o.get("human_resolution", d.human_resolution);
  o.get("n_translations", d.views.n_translations);
  o.get("n_views", d.views.n_views);
  o.get("fit_margin", d.views.fit_margin);
  o.get("render_size", d.render_size);
  o.finish();
  return d;
}

sampling::SamplerConfig sampler_from_json(const json& j) {
  sampling::SamplerConfig s;
  StrictObject o(j, "sampler");
  o.get("pool_size", s.pool_size);
  o.get("subset_size", s.subset_size);
  if (const json* sig = o.sub("sigmas")) {
    if (!sig->is_array() || sig->size() != 3)
      throw ConfigError("config: sampler.sigmas must be an array of 3 numbers");
    for (size_t i = 0; i < 3; ++i) s.sigmas[i] = sig->at(i).get<double>();
  }
  o.get("uniform_fraction", s.uniform_fraction);
  o.get("bbox_margin", s.bbox_margin);
  o.finish();
  return s;
}

prior::PriorConfig prior_from_json(const json& j) {
  prior::PriorConfig p;
  StrictObject o(j, "prior");
  o.get("eps_vis_fraction", p.eps_vis_fraction);
  o.finish();
  return p;
}

surface::FieldSpec field_from_json(const json& j) {
  surface::FieldSpec f;
  StrictObject o(j, "field");
  o.get("resolution", f.resolution);
  o.get("margin", f.margin);
  o.get("iso", f.iso);
  o.finish();
  return f;
}

metrics::MetricConfig metrics_from_json(const json& j) {
  metrics::MetricConfig m;
  StrictObject o(j, "metrics");
  o.get("n_samples", m.n_samples);
  o.get("tau_fraction", m.tau_fraction);
  o.get("iou_resolution", m.iou_resolution);
  o.get("p2s_pred_to_gt", m.p2s_pred_to_gt);
  o.get("seed", m.seed);
  o.finish();
  return m;
}

TrainConfig train_from_json(const json& j) {
  TrainConfig t;
  StrictObject o(j, "train");
  o.get("steps", t.steps);
  o.get("lr", t.lr);
  o.get("warmup_steps", t.warmup_steps);
  o.get("batch_views", t.batch_views);
  o.get("seed", t.seed);
  o.get("log_every", t.log_every);
  o.get("checkpoint_every", t.checkpoint_every);
  o.finish();
  return t;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (version != 1) throw ConfigError("config: unsupported version " + std::to_string(version));
  if (data.n_scenes <= 0) throw ConfigError("config: data.n_scenes must be positive");
  if (data.human_resolution < 16) throw ConfigError("config: data.human_resolution too small");
  if (data.views.n_translations <= 0 || data.views.n_views <= 0)
    throw ConfigError("config: data view counts must be positive");
  if (data.render_size < 0) throw ConfigError("config: data.render_size must be >= 0");
  if (render_size() % 4 != 0)
    throw ConfigError("config: render size must be divisible by 4 (two pooling stages)");
  sampler.validate();
  model.validate();
  if (prior.eps_vis_fraction <= 0.0)
    throw ConfigError("config: prior.eps_vis_fraction must be positive");
  if (field.resolution < 2) throw ConfigError("config: field.resolution must be at least 2");
  if (field.margin < 0.0) throw ConfigError("config: field.margin must be non-negative");
  if (metrics.n_samples <= 0) throw ConfigError("config: metrics.n_samples must be positive");
  if (metrics.tau_fraction <= 0.0) throw ConfigError("config: metrics.tau_fraction must be positive");
  if (metrics.iou_resolution < 2) throw ConfigError("config: metrics.iou_resolution too small");
  if (train.steps < 0) throw ConfigError("config: train.steps must be non-negative");
  if (train.lr < 0.0) throw ConfigError("config: train.lr must be non-negative");
  if (train.warmup_steps < 0) throw ConfigError("config: train.warmup_steps must be non-negative");
  if (train.batch_views <= 0) throw ConfigError("config: train.batch_views must be positive");
  if (inpainter != "oracle" && inpainter.rfind("external:", 0) != 0)
    throw ConfigError("config: inpainter must be 'oracle' or 'external:<command>'");
  if (inpainter.rfind("external:", 0) == 0 && inpainter.size() <= 9)
    throw ConfigError("config: external inpainter command is empty");
}

ExperimentConfig experiment_from_json(const json& j) {
  ExperimentConfig cfg;
  StrictObject o(j, "<root>");
  if (!o.has("version")) throw ConfigError("config: missing required 'version' field");
  o.get("version", cfg.version);
  if (const json* s = o.sub("data")) cfg.data = data_from_json(*s);
  if (const json* s = o.sub("sampler")) cfg.sampler = sampler_from_json(*s);
  if (const json* s = o.sub("model")) cfg.model = nn::model_config_from_json(*s);
  if (const json* s = o.sub("prior")) cfg.prior = prior_from_json(*s);
  if (const json* s = o.sub("field")) cfg.field = field_from_json(*s);
  if (const json* s = o.sub("metrics")) cfg.metrics = metrics_from_json(*s);
  if (const json* s = o.sub("train")) cfg.train = train_from_json(*s);
  o.get("inpainter", cfg.inpainter);
  o.finish();
  cfg.validate();
  return cfg;
}

json experiment_to_json(const ExperimentConfig& cfg) {
  json j;
  j["version"] = cfg.version;
  j["data"] = {{"n_scenes", cfg.data.n_scenes},
               {"human_resolution", cfg.data.human_resolution},
               {"n_translations", cfg.data.views.n_translations},
               {"n_views", cfg.data.views.n_views},
               {"fit_margin", cfg.data.views.fit_margin},
               {"render_size", cfg.data.render_size}};
  j["sampler"] = {{"pool_size", cfg.sampler.pool_size},
                  {"subset_size", cfg.sampler.subset_size},
                  {"sigmas", {cfg.sampler.sigmas[0], cfg.sampler.sigmas[1], cfg.sampler.sigmas[2]}},
                  {"uniform_fraction", cfg.sampler.uniform_fraction},
                  {"bbox_margin", cfg.sampler.bbox_margin}};
  j["model"] = nn::model_config_to_json(cfg.model);
  j["prior"] = {{"eps_vis_fraction", cfg.prior.eps_vis_fraction}};
  j["field"] = {{"resolution", cfg.field.resolution},
                {"margin", cfg.field.margin},
                {"iso", cfg.field.iso}};
  j["metrics"] = {{"n_samples", cfg.metrics.n_samples},
                  {"tau_fraction", cfg.metrics.tau_fraction},
                  {"iou_resolution", cfg.metrics.iou_resolution},
                  {"p2s_pred_to_gt", cfg.metrics.p2s_pred_to_gt},
                  {"seed", cfg.metrics.seed}};
  j["train"] = {{"steps", cfg.train.steps},
                {"lr", cfg.train.lr},
                {"warmup_steps", cfg.train.warmup_steps},
                {"batch_views", cfg.train.batch_views},
                {"seed", cfg.train.seed},
                {"log_every", cfg.train.log_every},
                {"checkpoint_every", cfg.train.checkpoint_every}};
  j["inpainter"] = cfg.inpainter;
  return j;
}

ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config: invalid JSON in " + path + ": " + e.what());
  }
  return experiment_from_json(j);
}

}  // namespace hoir::pipeline
