#pragma once

#include "hoir/geom/camera.hpp"
#include "hoir/scene/scene.hpp"

namespace hoir::sampling {

using geom::Vec3;

struct SamplerConfig {
  size_t pool_size = 200000;       // labeled candidate points per entity pool
  size_t subset_size = 20000;      // points drawn per entity per training step
  double sigmas[3] = {0.06, 0.01, 0.035};  // Gaussian surface-offset scales
  double uniform_fraction = 1.0 / 16.0;    // share of pool drawn uniformly in the box
  double bbox_margin = 0.1;                // box expansion for the uniform draw

  void validate() const;
};

// Flat labeled point pool. entity marks which surface a point was sampled
// around (0 human, 1 object; uniform draws share the entity's quota), occ_*
// hold ground-truth inside/outside for both shapes at every point.
struct LabeledPoints {
  std::vector<Vec3> points;
  std::vector<uint8_t> entity;
  std::vector<uint8_t> occ_h;
  std::vector<uint8_t> occ_o;

  size_t size() const { return points.size(); }
};

// Area-uniform surface draws, each offset by an isotropic Gaussian of the
// given scale. Throws GeometryError on a degenerate (zero-area) mesh.
std::vector<Vec3> sample_surface_gaussian(const geom::TriangleMesh& mesh, size_t n, double sigma,
                                          Rng& rng);

// Uniform draws inside the box expanded by margin x its diagonal on each side.
std::vector<Vec3> sample_uniform_bbox(const geom::Bbox& box, size_t n, double margin, Rng& rng);

// Samples both entity pools and labels every point against both meshes.
// Surface points are area-uniform draws offset by isotropic Gaussians with
// the three configured scales in equal shares; the remainder is uniform in
// the expanded joint bounding box. Deterministic in seed.
LabeledPoints sample_scene_points(const scene::Scene& scene, const SamplerConfig& cfg,
                                  uint64_t seed);

// Index subset of one entity's pool for a training step: subset_size draws
// without replacement (or the whole pool when smaller). Deterministic.
std::vector<uint32_t> draw_subset(const LabeledPoints& pool, uint8_t entity, size_t subset_size,
                                  uint64_t seed);

// One training step's worth of query points for a single entity. Positions
// live in the view's recentered frame (world minus anchor center); both
// occupancy labels travel with every point so either head can be supervised
// on either pool.
struct PointBatch {
  std::vector<Vec3> positions;
  std::vector<uint8_t> occ_h;
  std::vector<uint8_t> occ_o;
  uint8_t entity = 0;
  uint32_t view_id = 0;

  size_t size() const { return positions.size(); }
};

// Draws one per-view subset from each entity pool and recenters the points
// into the view's anchor frame. Deterministic in (seed, view_id).
std::pair<PointBatch, PointBatch> make_training_batch(const scene::Scene& scene,
                                                      const LabeledPoints& pool,
                                                      const geom::PerspectiveCamera& cam,
                                                      uint32_t view_id, const SamplerConfig& cfg,
                                                      uint64_t seed);

}  // namespace hoir::sampling
