#pragma once

#include "hoir/geom/bvh.hpp"
#include "hoir/scene/render.hpp"

namespace hoir::prior {

using geom::Vec3;

struct PriorConfig {
  // Depth slack for the visibility test, as a fraction of the scene
  // bounding-box diagonal. Absorbs raster depth interpolation error.
  double eps_vis_fraction = 0.005;
};

// The coordinate anchor: body-proxy centroid and its camera-space depth.
// Sample points are stored relative to `center`; depth features are
// measured relative to `z_c`.
struct AnchorFrame {
  Vec3 center = Vec3::Zero();
  double z_c = 0.0;
};

// center = proxy vertex centroid; z_c = its depth under `cam`. Throws
// GeometryError when the centroid is not in front of the camera.
AnchorFrame anchor_frame(const geom::TriangleMesh& body_proxy,
                         const geom::PerspectiveCamera& cam);

// Translate points by -frame.center (in place). recenter_inverse undoes it.
void recenter(std::vector<Vec3>& points, const AnchorFrame& frame);
void recenter_inverse(std::vector<Vec3>& points, const AnchorFrame& frame);

// Per-point, per-entity pose prior [d, v, z]:
//   d - signed distance from the query point to the entity's template mesh
//       (body proxy for the human, object mesh for the object), negative
//       inside,
//   v - 1 when the closest template point is visible in the joint
//       proxy+object depth render,
//   z - query-point camera depth relative to the anchor depth z_c.
struct PriorFeature {
  float d = 0.0f, v = 0.0f, z = 0.0f;
};

enum class Entity : uint8_t { kHuman = 0, kObject = 1 };

class PosePrior {
 public:
  // The view must outlive the prior. Query points are expected in the
  // canonical (world) frame; see `batch_recentered` for recentered inputs.
  PosePrior(const scene::Scene& scene, const scene::ViewBundle& view,
            const PriorConfig& cfg = PriorConfig{});

  PriorFeature at(const Vec3& x, Entity entity, uint64_t seed) const;
  std::vector<PriorFeature> batch(const std::vector<Vec3>& pts, Entity entity,
                                  uint64_t seed) const;
  // Same, for points already translated by -frame().center.
  std::vector<PriorFeature> batch_recentered(const std::vector<Vec3>& pts, Entity entity,
                                             uint64_t seed) const;

  const AnchorFrame& frame() const { return frame_; }
  double eps_vis() const { return eps_vis_; }

 private:
  const scene::ViewBundle& view_;
  geom::Bvh proxy_bvh_;
  geom::Bvh object_bvh_;
  AnchorFrame frame_;
  double eps_vis_ = 0.0;
};

}  // namespace hoir::prior
