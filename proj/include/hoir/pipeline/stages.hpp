#pragma once

#include <iosfwd>

#include "hoir/nn/checkpoint.hpp"
#include "hoir/pipeline/dataset.hpp"

namespace hoir::pipeline {

struct TrainStats {
  int steps = 0;
  double final_loss = 0.0;
  double final_loss_h = 0.0;
  double final_loss_o = 0.0;
};

// Trains cfg.model on every scene's training views (all but the last; a
// single-view scene trains on that view) and writes the final checkpoint to
// ckpt_path. Deterministic in cfg.train.seed for a fixed thread count.
// Throws Error when the loss goes non-finite.
TrainStats train_model(const ExperimentConfig& cfg, const std::vector<LoadedScene>& scenes,
                       const std::string& ckpt_path, std::ostream* log = nullptr);

// Reconstruction of one stored view through a trained model: the view's
// partial human image is completed by the configured inpainter before the
// field is evaluated.
surface::ReconstructionResult reconstruct_stored_view(const nn::Model<float>& model,
                                                      const LoadedScene& scene, int view_index,
                                                      const surface::FieldSpec& spec,
                                                      const std::string& inpainter, uint64_t seed);

struct EvalRow {
  std::string scene_dir;
  int view = 0;
  metrics::MetricReport report;
};

struct EvalSummary {
  std::vector<EvalRow> rows;
  metrics::MetricReport mean;
};

// Held-out evaluation: reconstructs each scene's last view and scores it
// against the ground-truth meshes.
EvalSummary evaluate_dataset(const ExperimentConfig& cfg, const nn::Model<float>& model,
                             const std::vector<LoadedScene>& scenes, std::ostream* log = nullptr);

nlohmann::json report_to_json(const metrics::MetricReport& r);
nlohmann::json summary_to_json(const EvalSummary& s);
// One table row per report: raw scene units plus the x10^-2 column pair
// used by the reference tables.
void print_report_table(std::ostream& os, const std::vector<std::pair<std::string,
                        metrics::MetricReport>>& rows);

struct AblationVariant {
  std::string name;
  nn::ModelConfig model;
};

// "arch[-no_sn][-no_prior][-no_if][-no_ih][-no_io]", e.g. "full-no_prior".
AblationVariant parse_variant(const nn::ModelConfig& base, const std::string& spec);
// The seven architecture rows on the base input set.
std::vector<AblationVariant> default_variants(const nn::ModelConfig& base);

struct AblationRow {
  std::string name;
  bool ok = false;
  std::string error;
  TrainStats train;
  metrics::MetricReport mean;
};

// FNV-1a over the scene seeds, point pools, labels, and view rasters; the
// ablation log prints it per variant so identical-data runs are auditable.
uint64_t dataset_hash(const std::vector<LoadedScene>& scenes);

// Trains and evaluates every variant on the same data with the same seed.
// A variant failure is recorded in its row; the matrix continues.
std::vector<AblationRow> run_ablation_matrix(const ExperimentConfig& cfg,
                                             const std::vector<LoadedScene>& scenes,
                                             const std::vector<AblationVariant>& variants,
                                             const std::string& out_dir, std::ostream& log);

}  // namespace hoir::pipeline
