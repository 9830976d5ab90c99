#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "hoir/pipeline/inpaint.hpp"
#include "hoir/pipeline/stages.hpp"
#include "hoir/scene/primitives.hpp"

namespace {

using namespace hoir;
using geom::Vec3;

std::vector<pipeline::LoadedScene> load_all_scenes(const std::string& data_dir) {
  std::vector<pipeline::LoadedScene> scenes;
  for (const std::string& dir : pipeline::list_scene_dirs(data_dir))
    scenes.push_back(pipeline::load_scene_dir(dir));
  return scenes;
}

void selftest_occupancy() {
  const geom::TriangleMesh mesh = scene::make_icosphere(0.7, 2);
  const geom::Bvh bvh(mesh);
  Rng rng(7);
  for (int i = 0; i < 300; ++i) {
    const Vec3 x(rng.uniform() * 2.0 - 1.0, rng.uniform() * 2.0 - 1.0, rng.uniform() * 2.0 - 1.0);
    if (std::abs(x.norm() - 0.7) < 0.02) continue;  // stay clear of the facet band
    const bool parity = geom::occupancy(bvh, x, derive_seed(11, static_cast<uint64_t>(i)));
    const bool winding = geom::winding_number(mesh, x) > 0.5;
    if (parity != winding)
      throw Error("selftest: ray-parity occupancy disagrees with the winding-number oracle");
  }
  std::cout << "selftest: occupancy parity vs winding oracle ok (300 points)\n";
}

void selftest_gradients() {
  nn::ModelConfig mc;
  mc.image_size = 8;
  mc.features = 2;
  mc.stem_channels = 2;
  mc.mlp_hidden = {6, 5};
  mc.mlp_skips = {2};
  nn::Model<double> model(mc, 3);

  Rng rng(41);
  auto randv = [&rng](size_t n) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.uniform() - 0.5);
    return v;
  };
  nn::ViewSample view;
  const size_t plane = 8 * 8;
  view.I_h = randv(5 * plane);
  view.I_o = randv(5 * plane);
  view.I_f = randv(5 * plane);
  view.S_n = randv(3 * plane);
  auto fill_block = [&](nn::PointBlock& b) {
    b.count = 3;
    for (int i = 0; i < 3; ++i) {
      b.uv.push_back(static_cast<float>(rng.uniform() * 8.0));
      b.uv.push_back(static_cast<float>(rng.uniform() * 8.0));
      for (int t = 0; t < 3; ++t) b.sigma_h.push_back(static_cast<float>(rng.uniform() - 0.5));
      for (int t = 0; t < 3; ++t) b.sigma_o.push_back(static_cast<float>(rng.uniform() - 0.5));
      b.occ_h.push_back(rng.uniform() < 0.5 ? 0.0f : 1.0f);
      b.occ_o.push_back(rng.uniform() < 0.5 ? 0.0f : 1.0f);
    }
  };
  fill_block(view.pts_h);
  fill_block(view.pts_o);

  auto loss_value = [&]() {
    nn::Graph<double> g;
    const nn::ForwardNodes nodes = model.forward(g, {view});
    return g.data(nodes.loss).v[0];
  };

  nn::Graph<double> g;
  const nn::ForwardNodes nodes = model.forward(g, {view});
  g.backward(nodes.loss);

  int checked = 0;
  for (size_t e = 0; e < model.params().entries.size() && checked < 6; e += 3) {
    auto& entry = model.params().entries[e];
    const auto& grad = g.data(nodes.params.at(entry.name)).g;
    const size_t i = entry.value.size() / 2;
    const double eps = 1e-5;
    const double saved = entry.value[i];
    entry.value[i] = saved + eps;
    const double lp = loss_value();
    entry.value[i] = saved - eps;
    const double lm = loss_value();
    entry.value[i] = saved;
    const double fd = (lp - lm) / (2.0 * eps);
    const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-10});
    if (std::abs(fd - grad[i]) / denom > 1e-4)
      throw Error("selftest: gradient check failed for " + entry.name);
    ++checked;
  }
  std::cout << "selftest: finite-difference gradients ok (" << checked << " parameter blocks)\n";
}

void selftest_marching_cubes() {
  const geom::Bbox box(Vec3(-1, -1, -1), Vec3(1, 1, 1));
  surface::ScalarGrid grid = surface::ScalarGrid::covering(box, 24, 0.0);
  grid.fill([](const Vec3& p) { return static_cast<float>(1.0 - p.norm()); });
  const geom::TriangleMesh mesh = surface::marching_cubes(grid, 0.5f);
  if (mesh.empty() || !mesh.watertight)
    throw Error("selftest: marching cubes did not close the sphere");
  double worst = 0.0;
  for (const Vec3& v : mesh.vertices) worst = std::max(worst, std::abs(v.norm() - 0.5));
  if (worst > 2.0 * grid.spacing.maxCoeff())
    throw Error("selftest: marching-cubes sphere radius error " + std::to_string(worst));
  std::cout << "selftest: marching-cubes sphere ok (max radius error " << worst << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hoir: joint human and object implicit reconstruction from rendered single views"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  std::string gen_config, gen_out;
  uint64_t gen_seed = 1;
  gen->add_option("--config", gen_config, "Experiment config JSON")->required();
  gen->add_option("--out", gen_out, "Output dataset directory")->required();
  gen->add_option("--seed", gen_seed, "Master seed");

  // train
  auto* train = app.add_subcommand("train", "Train a model on a dataset");
  std::string train_data, train_config, train_out = "model.hock";
  int train_steps = -1;
  uint64_t train_seed = 0;
  train->add_option("--data", train_data, "Dataset directory")->required();
  train->add_option("--config", train_config, "Experiment config JSON")->required();
  train->add_option("--out", train_out, "Checkpoint output path");
  train->add_option("--steps", train_steps, "Override config step count");
  train->add_option("--seed", train_seed, "Override config training seed");

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct", "Reconstruct one stored view");
  std::string rec_ckpt, rec_view, rec_out = "recon";
  std::string rec_inpainter = "oracle";
  int rec_res = 64;
  uint64_t rec_seed = 0;
  rec->add_option("--ckpt", rec_ckpt, "Checkpoint file")->required();
  rec->add_option("--view", rec_view, "View directory (scenes/<id>/views/<k>)")->required();
  rec->add_option("--res", rec_res, "Grid resolution along the longest axis");
  rec->add_option("--out", rec_out, "Output OBJ prefix");
  rec->add_option("--inpainter", rec_inpainter, "oracle or external:<command>");
  rec->add_option("--seed", rec_seed, "Prior evaluation seed");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Score a reconstruction against ground truth");
  std::string ev_pred, ev_pred_h, ev_gt, ev_gt_h, ev_out = "report.json";
  metrics::MetricConfig ev_cfg;
  ev->add_option("--pred", ev_pred, "Predicted joint mesh OBJ")->required();
  ev->add_option("--pred-human", ev_pred_h, "Predicted human mesh OBJ")->required();
  ev->add_option("--gt", ev_gt, "Ground-truth joint mesh OBJ")->required();
  ev->add_option("--gt-human", ev_gt_h, "Ground-truth human mesh OBJ")->required();
  ev->add_option("--out", ev_out, "Report JSON path");
  ev->add_option("--samples", ev_cfg.n_samples, "Surface samples per direction");
  ev->add_option("--iou-res", ev_cfg.iou_resolution, "IoU voxel resolution");
  ev->add_option("--seed", ev_cfg.seed, "Sampling seed");

  // ablate
  auto* ab = app.add_subcommand("ablate", "Train and evaluate a variant matrix");
  std::string ab_data, ab_config, ab_out = "ablation", ab_variants;
  ab->add_option("--data", ab_data, "Dataset directory")->required();
  ab->add_option("--config", ab_config, "Experiment config JSON")->required();
  ab->add_option("--out", ab_out, "Output directory for checkpoints and the report");
  ab->add_option("--variants", ab_variants,
                 "Comma-separated variant specs (default: the 7 architectures)");

  auto* st = app.add_subcommand("selftest", "Run the built-in oracle and gradient checks");
  (void)st;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      const pipeline::ExperimentConfig cfg = pipeline::load_experiment(gen_config);
      const std::vector<std::string> dirs = pipeline::write_dataset(gen_out, cfg, gen_seed);
      std::cout << "wrote " << dirs.size() << " scenes under " << gen_out << "\n";
    } else if (train->parsed()) {
      pipeline::ExperimentConfig cfg = pipeline::load_experiment(train_config);
      if (train->count("--steps")) cfg.train.steps = train_steps;
      if (train->count("--seed")) cfg.train.seed = train_seed;
      const auto scenes = load_all_scenes(train_data);
      const pipeline::TrainStats stats = pipeline::train_model(cfg, scenes, train_out, &std::cout);
      std::cout << "trained " << stats.steps << " steps, final loss " << stats.final_loss << "\n";
    } else if (rec->parsed()) {
      const nn::Checkpoint ckpt = nn::load_checkpoint(rec_ckpt);
      nn::Model<float> model(ckpt.config);
      model.params() = ckpt.params;
      int view_index = 0;
      const pipeline::LoadedScene scene = pipeline::load_scene_of_view(rec_view, view_index);
      surface::FieldSpec spec;
      spec.resolution = rec_res;
      const surface::ReconstructionResult result =
          pipeline::reconstruct_stored_view(model, scene, view_index, spec, rec_inpainter, rec_seed);
      geom::write_obj(rec_out + "_human.obj", result.human);
      geom::write_obj(rec_out + "_object.obj", result.object);
      geom::write_obj(rec_out + "_joint.obj", result.joint);
      std::cout << "wrote " << rec_out << "_{human,object,joint}.obj (" << result.human.face_count()
                << "/" << result.object.face_count() << "/" << result.joint.face_count()
                << " faces)\n";
    } else if (ev->parsed()) {
      const geom::TriangleMesh pred = geom::read_obj(ev_pred);
      const geom::TriangleMesh pred_h = geom::read_obj(ev_pred_h);
      const geom::TriangleMesh gt = geom::read_obj(ev_gt);
      const geom::TriangleMesh gt_h = geom::read_obj(ev_gt_h);
      const metrics::MetricReport rep = metrics::evaluate_joint_pair(pred, pred_h, gt, gt_h, ev_cfg);
      std::ofstream out(ev_out);
      if (!out) throw IoError("evaluate: cannot write " + ev_out);
      out << pipeline::report_to_json(rep).dump(2) << "\n";
      pipeline::print_report_table(std::cout, {{"result", rep}});
      std::cout << "report written to " << ev_out << "\n";
    } else if (ab->parsed()) {
      const pipeline::ExperimentConfig cfg = pipeline::load_experiment(ab_config);
      const auto scenes = load_all_scenes(ab_data);
      std::vector<pipeline::AblationVariant> variants;
      if (ab_variants.empty()) {
        variants = pipeline::default_variants(cfg.model);
      } else {
        size_t start = 0;
        while (start <= ab_variants.size()) {
          const size_t comma = ab_variants.find(',', start);
          const std::string spec =
              ab_variants.substr(start, comma == std::string::npos ? comma : comma - start);
          if (!spec.empty()) variants.push_back(pipeline::parse_variant(cfg.model, spec));
          if (comma == std::string::npos) break;
          start = comma + 1;
        }
        if (variants.empty()) throw ConfigError("ablate: no variants given");
      }
      const std::vector<pipeline::AblationRow> rows =
          pipeline::run_ablation_matrix(cfg, scenes, variants, ab_out, std::cout);

      nlohmann::json rows_json = nlohmann::json::array();
      bool any_ok = false;
      for (const pipeline::AblationRow& r : rows) {
        nlohmann::json rj{{"name", r.name}, {"ok", r.ok}};
        if (r.ok) {
          rj["final_loss"] = r.train.final_loss;
          rj["mean"] = pipeline::report_to_json(r.mean);
          any_ok = true;
        } else {
          rj["error"] = r.error;
        }
        rows_json.push_back(std::move(rj));
      }
      const std::string report_path = ab_out + "/ablation.json";
      std::ofstream out(report_path);
      if (!out) throw IoError("ablate: cannot write " + report_path);
      out << rows_json.dump(2) << "\n";
      std::cout << "ablation report written to " << report_path << "\n";
      if (!any_ok) throw Error("ablate: every variant failed");
    } else if (st->parsed()) {
      selftest_occupancy();
      selftest_gradients();
      selftest_marching_cubes();
      std::cout << "selftest: all checks passed\n";
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
