#include "hoir/surface/field.hpp"

#include <algorithm>

namespace hoir::surface {

using geom::TriangleMesh;
using geom::Vec3;
using nn::NnError;

nn::ViewSample to_view_sample(const scene::ViewBundle& view) {
  nn::ViewSample s;
  s.I_f = view.I_f.data;
  s.I_h = view.I_h.data;
  s.I_o = view.I_o.data;
  s.S_n = view.S_n.data;
  return s;
}

FieldEvaluator::FieldEvaluator(const nn::Model<float>& model, const scene::Scene& scene,
                               const scene::ViewBundle& view, uint64_t seed)
    : model_(&model), scene_(&scene), prior_(scene, view), cam_(view.cam), seed_(seed) {
  const int S = model.config().image_size;
  if (view.I_f.width != S || view.I_f.height != S)
    throw NnError("field evaluator: view renders " + std::to_string(view.I_f.width) +
                  "px but the model expects " + std::to_string(S) + "px");
  enc_ = model.encode(to_view_sample(view));
}

std::vector<float> FieldEvaluator::evaluate(const std::vector<Vec3>& points,
                                            prior::Entity entity) const {
  const int n = static_cast<int>(points.size());
  nn::PointBlock block;
  block.count = n;
  block.uv.resize(static_cast<size_t>(n) * 2);
  for (int i = 0; i < n; ++i) {
    geom::PixelCoord px;
    if (cam_.try_project(points[i], px)) {
      block.uv[2 * i] = static_cast<float>(px.u);
      block.uv[2 * i + 1] = static_cast<float>(px.v);
    } else {
      // Behind the camera: land outside the image so the features read zero.
      block.uv[2 * i] = -1.0f;
      block.uv[2 * i + 1] = -1.0f;
    }
  }
  if (model_->config().use_prior) {
    const auto sh = prior_.batch(points, prior::Entity::kHuman, derive_seed(seed_, 1));
    const auto so = prior_.batch(points, prior::Entity::kObject, derive_seed(seed_, 2));
    block.sigma_h.resize(static_cast<size_t>(n) * 3);
    block.sigma_o.resize(static_cast<size_t>(n) * 3);
    for (int i = 0; i < n; ++i) {
      block.sigma_h[3 * i] = sh[i].d;
      block.sigma_h[3 * i + 1] = sh[i].v;
      block.sigma_h[3 * i + 2] = sh[i].z;
      block.sigma_o[3 * i] = so[i].d;
      block.sigma_o[3 * i + 1] = so[i].v;
      block.sigma_o[3 * i + 2] = so[i].z;
    }
  }

  // Parallel over slices; each slice owns a disjoint output range, so the
  // values are independent of the thread count.
  std::vector<float> pred_h(n), pred_o(n);
  parallel_for(static_cast<size_t>(n), [&](size_t begin, size_t end) {
    const int b = static_cast<int>(begin), cnt = static_cast<int>(end - begin);
    nn::PointBlock slice;
    slice.count = cnt;
    slice.uv.assign(block.uv.begin() + 2 * b, block.uv.begin() + 2 * (b + cnt));
    if (!block.sigma_h.empty()) {
      slice.sigma_h.assign(block.sigma_h.begin() + 3 * b, block.sigma_h.begin() + 3 * (b + cnt));
      slice.sigma_o.assign(block.sigma_o.begin() + 3 * b, block.sigma_o.begin() + 3 * (b + cnt));
    }
    std::vector<float> ph, po;
    model_->eval_points(enc_, slice, ph, po);
    std::copy(ph.begin(), ph.end(), pred_h.begin() + b);
    std::copy(po.begin(), po.end(), pred_o.begin() + b);
  });
  return entity == prior::Entity::kHuman ? pred_h : pred_o;
}

ScalarGrid FieldEvaluator::domain(prior::Entity entity, const FieldSpec& spec) const {
  const TriangleMesh& tmpl =
      entity == prior::Entity::kHuman ? scene_->proxy : scene_->object;
  geom::Bbox box = tmpl.bounds();
  const Vec3 c = prior_.frame().center;
  box.translate(-c);
  return ScalarGrid::covering(box, spec.resolution, spec.margin);
}

void FieldEvaluator::fill_grid(ScalarGrid& grid, prior::Entity entity) const {
  std::vector<Vec3> pts;
  pts.reserve(grid.values.size());
  const Vec3 c = prior_.frame().center;
  for (int z = 0; z < grid.dims.z(); ++z)
    for (int y = 0; y < grid.dims.y(); ++y)
      for (int x = 0; x < grid.dims.x(); ++x) pts.push_back(grid.position(x, y, z) + c);
  const std::vector<float> occ = evaluate(pts, entity);
  std::copy(occ.begin(), occ.end(), grid.values.begin());
}

TriangleMesh FieldEvaluator::extract(prior::Entity entity, const FieldSpec& spec) const {
  ScalarGrid grid = domain(entity, spec);
  fill_grid(grid, entity);
  // Close the field at the domain wall: occupancy claimed outside the
  // reconstruction domain is cut and capped, so a non-empty result is a
  // closed solid (required by the parity-based IoU downstream).
  for (int z = 0; z < grid.dims.z(); ++z)
    for (int y = 0; y < grid.dims.y(); ++y)
      for (int x = 0; x < grid.dims.x(); ++x) {
        const bool wall = x == 0 || y == 0 || z == 0 || x == grid.dims.x() - 1 ||
                          y == grid.dims.y() - 1 || z == grid.dims.z() - 1;
        if (wall) grid.at(x, y, z) = 0.0f;
      }
  TriangleMesh mesh = marching_cubes(grid, spec.iso);
  mesh.translate(prior_.frame().center);
  return mesh;
}

ReconstructionResult reconstruct_view(const nn::Model<float>& model, const scene::Scene& scene,
                                      const scene::ViewBundle& view, const FieldSpec& spec,
                                      uint64_t seed) {
  FieldEvaluator eval(model, scene, view, seed);
  ReconstructionResult out;
  out.human = eval.extract(prior::Entity::kHuman, spec);
  out.object = eval.extract(prior::Entity::kObject, spec);
  out.joint = geom::merge({out.human, out.object});
  return out;
}

}  // namespace hoir::surface
