#include "hoir/prior/prior.hpp"

#include "hoir/geom/queries.hpp"

namespace hoir::prior {

AnchorFrame anchor_frame(const geom::TriangleMesh& body_proxy,
                         const geom::PerspectiveCamera& cam) {
  AnchorFrame frame;
  frame.center = body_proxy.vertex_centroid();
  frame.z_c = cam.depth_of(frame.center);
  if (!(frame.z_c > 0.0))
    throw GeometryError("anchor_frame: body proxy centroid behind the camera");
  return frame;
}

void recenter(std::vector<Vec3>& points, const AnchorFrame& frame) {
  for (auto& p : points) p -= frame.center;
}

void recenter_inverse(std::vector<Vec3>& points, const AnchorFrame& frame) {
  for (auto& p : points) p += frame.center;
}

PosePrior::PosePrior(const scene::Scene& scene, const scene::ViewBundle& view,
                     const PriorConfig& cfg)
    : view_(view), proxy_bvh_(scene.proxy), object_bvh_(scene.object) {
  frame_ = anchor_frame(scene.proxy, view.cam);
  eps_vis_ = cfg.eps_vis_fraction * scene.joint_bounds().diagonal().norm();
}

PriorFeature PosePrior::at(const Vec3& x, Entity entity, uint64_t seed) const {
  const geom::Bvh& tmpl = entity == Entity::kHuman ? proxy_bvh_ : object_bvh_;
  const geom::ClosestPoint cp = tmpl.closest_point(x);
  const bool inside = geom::occupancy(tmpl, x, seed);

  PriorFeature f;
  f.d = static_cast<float>(inside ? -cp.dist : cp.dist);
  f.v = geom::visible(view_.prior_depth, view_.cam, cp.point, eps_vis_) ? 1.0f : 0.0f;
  f.z = static_cast<float>(view_.cam.depth_of(x) - frame_.z_c);
  return f;
}

std::vector<PriorFeature> PosePrior::batch(const std::vector<Vec3>& pts, Entity entity,
                                           uint64_t seed) const {
  std::vector<PriorFeature> out(pts.size());
  parallel_for(pts.size(), [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) out[i] = at(pts[i], entity, derive_seed(seed, i));
  });
  return out;
}

std::vector<PriorFeature> PosePrior::batch_recentered(const std::vector<Vec3>& pts, Entity entity,
                                                      uint64_t seed) const {
  std::vector<PriorFeature> out(pts.size());
  parallel_for(pts.size(), [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i)
      out[i] = at(pts[i] + frame_.center, entity, derive_seed(seed, i));
  });
  return out;
}

}  // namespace hoir::prior
