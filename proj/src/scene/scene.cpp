#include "hoir/scene/scene.hpp"

#include <cmath>

#include "hoir/geom/queries.hpp"
#include "hoir/geom/raster.hpp"

namespace hoir::scene {

using geom::Bvh;
using geom::DepthBuffer;
using hoir::GeometryError;

Bbox Scene::joint_bounds() const {
  Bbox box = human.bounds();
  box.extend(object.bounds());
  return box;
}

double Scene::contact_gap() const {
  const Bvh bh(human), bo(object);
  return Bvh::distance(bh, bo, Rigid::Identity());
}

namespace {

Eigen::Quaterniond random_rotation(Rng& rng) {
  // Uniform over SO(3): normalized 4-normal draw.
  Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  while (q.norm() < 1e-6)
    q = Eigen::Quaterniond(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  q.normalize();
  return q;
}

Vec3 random_unit(Rng& rng) {
  Vec3 v(rng.normal(), rng.normal(), rng.normal());
  while (v.norm() < 1e-6) v = Vec3(rng.normal(), rng.normal(), rng.normal());
  return v.normalized();
}

}  // namespace

Scene compose_scene(uint64_t seed, int human_resolution, const ContactParams& contact) {
  Scene scene;
  scene.seed = seed;

  Rng rng(derive_seed(seed, hash_seed("scene")));
  scene.human_params = HumanParams::sample(rng);
  scene.human = make_human(scene.human_params, human_resolution);
  scene.proxy = make_body_proxy(scene.human_params, human_resolution);

  scene.object_kind = static_cast<ObjectKind>(rng.uniform_index(5));
  const double human_diag = scene.human.bounds().diagonal().norm();
  scene.object_scale = rng.uniform(0.08, 0.16) * human_diag;
  TriangleMesh canonical = sample_object(rng, scene.object_kind, scene.object_scale);

  const Bvh human_bvh(scene.human);
  const Bvh object_bvh(canonical);
  const double tol = contact.gap_fraction * human_diag;
  const Vec3 human_center = scene.human.bounds().center();
  const double reach = scene.human.bounds().diagonal().norm() / 2.0 +
                       canonical.bounds().diagonal().norm() / 2.0;

  for (int attempt = 0; attempt < contact.max_attempts; ++attempt) {
    const Eigen::Quaterniond rot = random_rotation(rng);
    // Random initial drop, guaranteed separate, then slide the object along
    // the line from its own center toward the human center.
    const Vec3 start = human_center + rng.uniform(1.3, 2.0) * reach * random_unit(rng);
    const Vec3 dir = (human_center - start).normalized();

    auto pose_at = [&](double t) {
      Rigid pose = Rigid::Identity();
      pose.linear() = rot.toRotationMatrix();
      // Position the object's bbox center at start + t*dir.
      pose.translation() = start + t * dir - pose.linear() * canonical.bounds().center();
      return pose;
    };
    auto gap_at = [&](double t) { return Bvh::distance(human_bvh, object_bvh, pose_at(t)); };
    // Surface distance alone cannot flag an object swallowed whole by the
    // body (its skin is then strictly inside, at positive distance), so the
    // penetration test also asks whether the object's center is interior.
    auto penetrating = [&](double t) {
      if (gap_at(t) <= 0.0) return true;
      return occupancy(human_bvh, start + t * dir, derive_seed(seed, 0x706f6b65));
    };

    if (penetrating(0.0)) continue;  // drop point itself collides; re-draw
    // Walk inward until penetration (object center on the human center is
    // virtually always inside, but thin shapes may need an extra push).
    const double span = (human_center - start).norm();
    double t_pen = span;
    int extend = 0;
    while (!penetrating(t_pen) && extend++ < 4) t_pen += 0.25 * reach;
    if (!penetrating(t_pen)) continue;

    double t_sep = 0.0;
    for (int it = 0; it < contact.bisection_steps; ++it) {
      const double mid = 0.5 * (t_sep + t_pen);
      if (!penetrating(mid))
        t_sep = mid;
      else
        t_pen = mid;
    }
    const double gap = gap_at(t_sep);
    if (gap <= 0.0 || gap > tol) continue;

    scene.object_pose = pose_at(t_sep);
    scene.object = canonical;
    scene.object.transform(scene.object_pose);
    return scene;
  }
  throw GeometryError("compose_scene: no contact found for seed " + std::to_string(seed));
}

std::vector<ViewSpec> place_views(const Scene& scene, const PerspectiveCamera& base,
                                  const ViewParams& vp, uint64_t seed) {
  if (vp.n_translations < 1 || vp.n_views < 1)
    throw GeometryError("place_views: counts must be positive");
  base.validate();
  Rng rng(derive_seed(seed, hash_seed("views")));

  // Frame the human: bounding sphere must fit the frustum with margin. The
  // object rides along; configurations that push it out of view are culled
  // below by the object-silhouette check.
  const Bbox hbox = scene.human.bounds();
  const Vec3 c = hbox.center();
  const double radius = 0.5 * hbox.diagonal().norm() * vp.fit_margin;
  const double tan_u = 0.5 * base.width / base.fx;
  const double tan_v = 0.5 * base.height / base.fy;
  const double tan_min = std::min(tan_u, tan_v);
  const double z_fit = radius / tan_min;  // nearest depth that fits the sphere

  std::vector<ViewSpec> retained;
  for (int ti = 0; ti < vp.n_translations; ++ti) {
    const double z = z_fit * rng.uniform(1.05, 1.5);
    // Lateral slack available at this depth, kept conservative.
    const double slack_x = std::max(0.0, z * tan_u - radius);
    const double slack_y = std::max(0.0, z * tan_v - radius);
    const Vec3 target(rng.uniform(-0.8, 0.8) * slack_x, rng.uniform(-0.8, 0.8) * slack_y, z);
    const Vec3 translation = target - c;  // moves the human center to `target`

    for (int vi = 0; vi < vp.n_views; ++vi) {
      const double azimuth = 2.0 * M_PI * vi / vp.n_views;
      // Scene transform S(x) = translation + R(x - c) + c about the vertical
      // axis through the human center, folded into the camera extrinsics:
      // world-to-camera = base.pose composed with S.
      Eigen::AngleAxisd az(azimuth, Vec3::UnitY());
      Rigid s = Rigid::Identity();
      s.linear() = az.toRotationMatrix();
      s.translation() = translation + c - s.linear() * c;

      ViewSpec view;
      view.translation_index = ti;
      view.translation = translation;
      view.azimuth = azimuth;
      view.camera = base;
      view.camera.pose = base.pose * s;

      // Retention: object silhouette non-empty in this configuration.
      DepthBuffer buf(base.width, base.height);
      geom::rasterize(scene.object, view.camera, 1, buf);
      bool visible = false;
      for (int8_t e : buf.entity)
        if (e == 1) {
          visible = true;
          break;
        }
      if (visible) retained.push_back(view);
    }
  }
  if (retained.empty()) throw GeometryError("place_views: every view configuration was discarded");
  return retained;
}

}  // namespace hoir::scene
