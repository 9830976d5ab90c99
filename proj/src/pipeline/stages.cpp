#include "hoir/pipeline/stages.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "hoir/nn/adam.hpp"
#include "hoir/pipeline/inpaint.hpp"

namespace hoir::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Query points for one training step: a drawn subset of the pool, with
// projected pixel coordinates and the view's cached pose features attached.
nn::PointBlock make_block(const LoadedScene& sc, const sampling::LabeledPoints& pool, int view,
                          uint8_t entity, size_t subset, uint64_t seed) {
  const std::vector<uint32_t> idx = sampling::draw_subset(pool, entity, subset, seed);
  const PointCache& ch = sc.cache_h;
  const PointCache& co = sc.cache_o;
  const size_t n_h = ch.size();
  if (ch.sigma.size() <= static_cast<size_t>(view) || co.sigma.size() <= static_cast<size_t>(view))
    throw IoError("dataset: pose-feature cache missing for view " + std::to_string(view) + " in " +
                  sc.dir);
  const geom::PerspectiveCamera& cam = sc.views[static_cast<size_t>(view)].bundle.cam;

  nn::PointBlock blk;
  blk.count = static_cast<int>(idx.size());
  blk.uv.reserve(idx.size() * 2);
  blk.sigma_h.reserve(idx.size() * 3);
  blk.sigma_o.reserve(idx.size() * 3);
  blk.occ_h.reserve(idx.size());
  blk.occ_o.reserve(idx.size());
  for (uint32_t gi : idx) {
    const bool from_h = gi < n_h;
    const PointCache& c = from_h ? ch : co;
    const size_t li = from_h ? gi : gi - n_h;
    geom::PixelCoord px;
    if (c.points[li].allFinite() && cam.try_project(c.points[li], px)) {
      blk.uv.push_back(static_cast<float>(px.u));
      blk.uv.push_back(static_cast<float>(px.v));
    } else {
      blk.uv.push_back(-1.0f);  // outside the image: features read zero
      blk.uv.push_back(-1.0f);
    }
    const auto& sh = c.sigma[static_cast<size_t>(view)][0];
    const auto& so = c.sigma[static_cast<size_t>(view)][1];
    for (int t = 0; t < 3; ++t) blk.sigma_h.push_back(sh[li * 3 + t]);
    for (int t = 0; t < 3; ++t) blk.sigma_o.push_back(so[li * 3 + t]);
    blk.occ_h.push_back(static_cast<float>(c.occ_h[li]));
    blk.occ_o.push_back(static_cast<float>(c.occ_o[li]));
  }
  return blk;
}

// Views each scene contributes to training: all but the held-out last view,
// unless there is only one.
int train_view_count(const LoadedScene& sc) {
  return sc.views.size() >= 2 ? static_cast<int>(sc.views.size()) - 1 : 1;
}

void check_image_size(const ExperimentConfig& cfg, const LoadedScene& sc) {
  if (sc.views.empty()) throw IoError("dataset: scene has no views: " + sc.dir);
  const int w = sc.views[0].bundle.I_f.width;
  if (w != cfg.model.image_size)
    throw ConfigError("train: dataset rendered at " + std::to_string(w) +
                      " but the model expects " + std::to_string(cfg.model.image_size));
}

metrics::MetricReport mean_report(const std::vector<EvalRow>& rows) {
  metrics::MetricReport m;
  if (rows.empty()) return m;
  for (const EvalRow& r : rows) {
    m.p2s += r.report.p2s;
    m.cd += r.report.cd;
    m.iou += r.report.iou;
    m.normal += r.report.normal;
    m.fscore += r.report.fscore;
    m.tau += r.report.tau;
  }
  const double n = static_cast<double>(rows.size());
  m.p2s /= n;
  m.cd /= n;
  m.iou /= n;
  m.normal /= n;
  m.fscore /= n;
  m.tau /= n;
  m.n_samples = rows[0].report.n_samples;
  return m;
}

}  // namespace

TrainStats train_model(const ExperimentConfig& cfg, const std::vector<LoadedScene>& scenes,
                       const std::string& ckpt_path, std::ostream* log) {
  cfg.validate();
  if (scenes.empty()) throw Error("train: no scenes loaded");
  for (const LoadedScene& sc : scenes) check_image_size(cfg, sc);

  std::vector<std::pair<int, int>> pairs;  // (scene index, view index)
  for (size_t si = 0; si < scenes.size(); ++si)
    for (int v = 0; v < train_view_count(scenes[si]); ++v)
      pairs.emplace_back(static_cast<int>(si), v);

  std::vector<sampling::LabeledPoints> pools;
  pools.reserve(scenes.size());
  for (const LoadedScene& sc : scenes) {
    if (sc.cache_h.size() == 0 || sc.cache_o.size() == 0)
      throw IoError("dataset: point caches missing in " + sc.dir);
    pools.push_back(sc.pool());
  }

  // Image stacks are fixed per view; inpaint once up front.
  std::vector<nn::ViewSample> images(pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    const auto& b = scenes[static_cast<size_t>(pairs[i].first)].views[static_cast<size_t>(pairs[i].second)].bundle;
    images[i].I_h = inpaint_bundle(cfg.inpainter, b).data;
    images[i].I_o = b.I_o.data;
    images[i].I_f = b.I_f.data;
    images[i].S_n = b.S_n.data;
  }

  nn::Model<float> model(cfg.model, derive_seed(cfg.train.seed, hash_seed("init")));
  nn::AdamConfig opt_cfg;
  opt_cfg.lr = cfg.train.lr;
  nn::Adam<float> opt(model.params(), opt_cfg);

  TrainStats stats;
  stats.steps = cfg.train.steps;
  for (int step = 0; step < cfg.train.steps; ++step) {
    if (cfg.train.warmup_steps > 0)
      opt.set_lr(cfg.train.lr *
                 std::min(1.0, (step + 1.0) / static_cast<double>(cfg.train.warmup_steps)));
    std::vector<nn::ViewSample> batch;
    batch.reserve(static_cast<size_t>(cfg.train.batch_views));
    for (int slot = 0; slot < cfg.train.batch_views; ++slot) {
      const size_t k = static_cast<size_t>(step) * cfg.train.batch_views + slot;
      const size_t pi = k % pairs.size();
      nn::ViewSample vs = images[pi];
      const uint64_t draw_seed = derive_seed(cfg.train.seed, derive_seed(hash_seed("draw"), k));
      const LoadedScene& sc = scenes[static_cast<size_t>(pairs[pi].first)];
      const sampling::LabeledPoints& pool = pools[static_cast<size_t>(pairs[pi].first)];
      vs.pts_h = make_block(sc, pool, pairs[pi].second, 0, cfg.sampler.subset_size, draw_seed);
      vs.pts_o = make_block(sc, pool, pairs[pi].second, 1, cfg.sampler.subset_size, draw_seed);
      batch.push_back(std::move(vs));
    }

    nn::Graph<float> g;
    const nn::ForwardNodes nodes = model.forward(g, batch);
    const float loss = g.data(nodes.loss).v[0];
    if (!std::isfinite(loss))
      throw Error("train: non-finite loss at step " + std::to_string(step) +
                  "; aborting before the update");
    stats.final_loss = loss;
    stats.final_loss_h = g.data(nodes.loss_h).v[0];
    stats.final_loss_o = g.data(nodes.loss_o).v[0];

    g.backward(nodes.loss);
    opt.step(g, nodes.params);

    const bool last = step + 1 == cfg.train.steps;
    if (log && cfg.train.log_every > 0 && (step % cfg.train.log_every == 0 || last))
      *log << "step " << std::setw(6) << step << "  loss " << std::setprecision(6) << loss
           << "  (h " << stats.final_loss_h << ", o " << stats.final_loss_o << ")\n";
    if (cfg.train.checkpoint_every > 0 && (step + 1) % cfg.train.checkpoint_every == 0 && !last)
      nn::save_checkpoint(ckpt_path, cfg.model, model.params(), &opt);
  }

  nn::save_checkpoint(ckpt_path, cfg.model, model.params(), &opt);
  if (log) *log << "checkpoint written to " << ckpt_path << "\n";
  return stats;
}

surface::ReconstructionResult reconstruct_stored_view(const nn::Model<float>& model,
                                                      const LoadedScene& scene, int view_index,
                                                      const surface::FieldSpec& spec,
                                                      const std::string& inpainter,
                                                      uint64_t seed) {
  if (view_index < 0 || static_cast<size_t>(view_index) >= scene.views.size())
    throw Error("reconstruct: view index out of range");
  scene::ViewBundle bundle = scene.views[static_cast<size_t>(view_index)].bundle;
  bundle.I_h = inpaint_bundle(inpainter, bundle);
  return surface::reconstruct_view(model, scene.scene, bundle, spec, seed);
}

EvalSummary evaluate_dataset(const ExperimentConfig& cfg, const nn::Model<float>& model,
                             const std::vector<LoadedScene>& scenes, std::ostream* log) {
  EvalSummary out;
  for (size_t si = 0; si < scenes.size(); ++si) {
    const LoadedScene& sc = scenes[si];
    if (sc.views.empty()) throw IoError("dataset: scene has no views: " + sc.dir);
    const int v = static_cast<int>(sc.views.size()) - 1;
    const uint64_t seed = derive_seed(cfg.metrics.seed, derive_seed(hash_seed("eval"), si));
    const surface::ReconstructionResult rec =
        reconstruct_stored_view(model, sc, v, cfg.field, cfg.inpainter, seed);
    metrics::MetricReport rep = metrics::evaluate_reconstruction(
        rec.human, rec.object, sc.scene.human, sc.scene.object, cfg.metrics);
    if (log)
      *log << "scene " << sc.dir << " view " << v << ": IoU " << std::setprecision(4) << rep.iou
           << ", CD " << rep.cd << "\n";
    out.rows.push_back({sc.dir, v, rep});
  }
  out.mean = mean_report(out.rows);
  return out;
}

json report_to_json(const metrics::MetricReport& r) {
  return json{{"p2s", r.p2s},       {"cd", r.cd},           {"iou", r.iou},
              {"normal", r.normal}, {"fscore", r.fscore},   {"n_samples", r.n_samples},
              {"tau", r.tau},       {"p2s_x100", r.p2s * 100.0}, {"cd_x100", r.cd * 100.0}};
}

json summary_to_json(const EvalSummary& s) {
  json rows = json::array();
  for (const EvalRow& r : s.rows)
    rows.push_back(json{{"scene", r.scene_dir}, {"view", r.view}, {"report", report_to_json(r.report)}});
  return json{{"rows", rows}, {"mean", report_to_json(s.mean)}};
}

void print_report_table(std::ostream& os,
                        const std::vector<std::pair<std::string, metrics::MetricReport>>& rows) {
  size_t width = 8;
  for (const auto& [name, rep] : rows) width = std::max(width, name.size());
  os << std::left << std::setw(static_cast<int>(width + 2)) << "name"
     << std::right << std::setw(8) << "IoU" << std::setw(9) << "Normal" << std::setw(9)
     << "fScore" << std::setw(11) << "P2S" << std::setw(11) << "CD" << std::setw(11)
     << "P2S(e-2)" << std::setw(11) << "CD(e-2)" << "\n";
  for (const auto& [name, rep] : rows) {
    os << std::left << std::setw(static_cast<int>(width + 2)) << name << std::right
       << std::fixed << std::setprecision(4) << std::setw(8) << rep.iou << std::setw(9)
       << rep.normal << std::setprecision(1) << std::setw(9) << rep.fscore
       << std::setprecision(5) << std::setw(11) << rep.p2s << std::setw(11) << rep.cd
       << std::setprecision(3) << std::setw(11) << rep.p2s * 100.0 << std::setw(11)
       << rep.cd * 100.0 << "\n";
    os.unsetf(std::ios::fixed);
  }
}

AblationVariant parse_variant(const nn::ModelConfig& base, const std::string& spec) {
  if (spec.empty()) throw ConfigError("ablation: empty variant spec");
  std::vector<std::string> parts;
  size_t start = 0;
  while (start <= spec.size()) {
    const size_t dash = spec.find('-', start);
    parts.push_back(spec.substr(start, dash == std::string::npos ? dash : dash - start));
    if (dash == std::string::npos) break;
    start = dash + 1;
  }
  AblationVariant v{spec, base};
  v.model.arch = nn::parse_architecture(parts[0]);
  for (size_t i = 1; i < parts.size(); ++i) {
    const std::string& t = parts[i];
    if (t == "no_sn") v.model.use_sn = false;
    else if (t == "no_prior") v.model.use_prior = false;
    else if (t == "no_if") v.model.use_if = false;
    else if (t == "no_ih") v.model.use_ih = false;
    else if (t == "no_io") v.model.use_io = false;
    else throw ConfigError("ablation: unknown input toggle '" + t + "' in variant '" + spec + "'");
  }
  return v;
}

std::vector<AblationVariant> default_variants(const nn::ModelConfig& base) {
  std::vector<AblationVariant> out;
  for (nn::Architecture a :
       {nn::Architecture::kFull, nn::Architecture::kSingleMlp, nn::Architecture::kSingleTrans,
        nn::Architecture::kSingleAll, nn::Architecture::kNoTrans, nn::Architecture::kConcatTrans,
        nn::Architecture::kConcatNoTrans}) {
    AblationVariant v{nn::architecture_name(a), base};
    v.model.arch = a;
    out.push_back(std::move(v));
  }
  return out;
}

uint64_t dataset_hash(const std::vector<LoadedScene>& scenes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* p, size_t n) { h = fnv1a(p, n, h); };
  for (const LoadedScene& sc : scenes) {
    mix(&sc.seed, sizeof sc.seed);
    for (const PointCache* c : {&sc.cache_h, &sc.cache_o}) {
      for (const Vec3& p : c->points) {
        const double xyz[3] = {p.x(), p.y(), p.z()};
        mix(xyz, sizeof xyz);
      }
      if (!c->occ_h.empty()) mix(c->occ_h.data(), c->occ_h.size());
      if (!c->occ_o.empty()) mix(c->occ_o.data(), c->occ_o.size());
      for (const auto& view : c->sigma)
        for (const auto& block : view)
          if (!block.empty()) mix(block.data(), block.size() * sizeof(float));
    }
    for (const LoadedView& lv : sc.views)
      for (const geom::Image* img : {&lv.bundle.I_f, &lv.bundle.I_p, &lv.bundle.I_h,
                                     &lv.bundle.I_o, &lv.bundle.S_n})
        if (!img->data.empty()) mix(img->data.data(), img->data.size() * sizeof(float));
  }
  return h;
}

std::vector<AblationRow> run_ablation_matrix(const ExperimentConfig& cfg,
                                             const std::vector<LoadedScene>& scenes,
                                             const std::vector<AblationVariant>& variants,
                                             const std::string& out_dir, std::ostream& log) {
  fs::create_directories(out_dir);
  const uint64_t data_hash = dataset_hash(scenes);

  std::vector<AblationRow> rows;
  for (const AblationVariant& variant : variants) {
    log << "=== variant " << variant.name << "  (data hash 0x" << std::hex << data_hash
        << std::dec << ", seed " << cfg.train.seed << ")\n";
    AblationRow row;
    row.name = variant.name;
    try {
      ExperimentConfig vcfg = cfg;
      vcfg.model = variant.model;
      vcfg.model.validate();
      const std::string ckpt = (fs::path(out_dir) / (variant.name + ".hock")).string();
      row.train = train_model(vcfg, scenes, ckpt, &log);
      const nn::Checkpoint loaded = nn::load_checkpoint(ckpt);
      nn::Model<float> model(loaded.config);
      model.params() = loaded.params;
      row.mean = evaluate_dataset(vcfg, model, scenes, &log).mean;
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
      log << "variant " << variant.name << " failed: " << e.what() << "\n";
    }
    rows.push_back(std::move(row));
  }

  // Ranked table, best IoU first; failures follow unranked.
  std::vector<std::pair<std::string, metrics::MetricReport>> table;
  std::vector<AblationRow> ranked = rows;
  std::stable_sort(ranked.begin(), ranked.end(), [](const AblationRow& a, const AblationRow& b) {
    if (a.ok != b.ok) return a.ok;
    return a.mean.iou > b.mean.iou;
  });
  for (const AblationRow& r : ranked)
    if (r.ok) table.emplace_back(r.name, r.mean);
  log << "\n";
  print_report_table(log, table);
  for (const AblationRow& r : ranked)
    if (!r.ok) log << r.name << "  FAILED: " << r.error << "\n";
  return rows;
}

}  // namespace hoir::pipeline
