#pragma once

#include "hoir/nn/model.hpp"
#include "hoir/prior/prior.hpp"
#include "hoir/surface/marching_cubes.hpp"

namespace hoir::surface {

// Network-side copy of one view's images (no sample points attached). The
// bundle's planar float layout is already what the encoders expect.
nn::ViewSample to_view_sample(const scene::ViewBundle& view);

struct FieldSpec {
  int resolution = 64;  // samples along the longest grid axis
  double margin = 0.1;  // fractional bounding-box expansion
  float iso = 0.5f;
};

// Dense evaluation of a trained occupancy field from a single view. The
// reconstruction domain is anchored: grids live in the recentered frame
// (anchor center at the origin) while extracted meshes come back in world
// coordinates.
class FieldEvaluator {
 public:
  // The view must outlive the evaluator. Encoders run once, here.
  FieldEvaluator(const nn::Model<float>& model, const scene::Scene& scene,
                 const scene::ViewBundle& view, uint64_t seed);

  // Occupancy of one entity at world-frame points. Points outside the image
  // (or behind the camera) read zero image features and still evaluate.
  std::vector<float> evaluate(const std::vector<Vec3>& points, prior::Entity entity) const;

  // Grid covering the entity's template bounds, recentered, per `spec`.
  ScalarGrid domain(prior::Entity entity, const FieldSpec& spec) const;

  // Fills a recentered-frame grid with field values.
  void fill_grid(ScalarGrid& grid, prior::Entity entity) const;

  // marching_cubes over domain() at spec.iso; world-frame result. An empty
  // mesh means the field never crossed the iso level.
  geom::TriangleMesh extract(prior::Entity entity, const FieldSpec& spec) const;

  const prior::AnchorFrame& frame() const { return prior_.frame(); }

 private:
  const nn::Model<float>* model_;
  const scene::Scene* scene_;
  nn::EncodedView enc_;
  prior::PosePrior prior_;
  geom::PerspectiveCamera cam_;
  uint64_t seed_;
};

struct ReconstructionResult {
  geom::TriangleMesh human, object, joint;  // joint = merged soup
};

// Full single-view reconstruction of both entities.
ReconstructionResult reconstruct_view(const nn::Model<float>& model, const scene::Scene& scene,
                                      const scene::ViewBundle& view, const FieldSpec& spec,
                                      uint64_t seed);

}  // namespace hoir::surface
