#pragma once

#include <json.hpp>

#include "hoir/metrics/metrics.hpp"
#include "hoir/nn/model_json.hpp"
#include "hoir/sampling/sampler.hpp"
#include "hoir/surface/field.hpp"

namespace hoir::pipeline {

// Dataset generation settings: how many scenes, how detailed the figures,
// and the view grid. render_size 0 means "render at the model's input size"
// (intrinsics scale with the target resolution, so a smaller render is the
// same camera, downsampled).
struct DataConfig {
  int n_scenes = 2;
  int human_resolution = 48;  // voxel remesh grid for the procedural figures
  scene::ViewParams views;
  int render_size = 0;
};

struct TrainConfig {
  int steps = 200;
  double lr = 1e-4;
  int warmup_steps = 0;  // linear ramp to lr; guards sigmoid heads early on
  int batch_views = 4;   // views per optimizer step
  uint64_t seed = 1;
  int log_every = 25;
  int checkpoint_every = 0;  // 0: final checkpoint only
};

// One experiment, loaded from a single versioned JSON document. Parsing is
// strict: unknown keys anywhere raise ConfigError (typo protection for
// ablation sweeps). Missing keys keep these defaults.
struct ExperimentConfig {
  int version = 1;
  DataConfig data;
  sampling::SamplerConfig sampler;
  nn::ModelConfig model;
  prior::PriorConfig prior;
  surface::FieldSpec field;
  metrics::MetricConfig metrics;
  TrainConfig train;
  std::string inpainter = "oracle";  // "oracle" or "external:<command>"

  int render_size() const { return data.render_size > 0 ? data.render_size : model.image_size; }
  void validate() const;
};

ExperimentConfig experiment_from_json(const nlohmann::json& j);
nlohmann::json experiment_to_json(const ExperimentConfig& cfg);

// Reads and validates a config file. IoError on unreadable files,
// ConfigError on malformed content.
ExperimentConfig load_experiment(const std::string& path);

}  // namespace hoir::pipeline
