#pragma once

#include "hoir/geom/bvh.hpp"
#include "hoir/geom/camera.hpp"
#include "hoir/scene/primitives.hpp"

namespace hoir::scene {

using geom::Bbox;
using geom::PerspectiveCamera;
using geom::Rigid;
using geom::Vec3;

struct ContactParams {
  // Max allowed gap as a fraction of the human bounding-box diagonal;
  // composed scenes end with surface gap in (0, tolerance], no penetration.
  double gap_fraction = 1e-3;
  int max_attempts = 16;    // random initial object placements tried
  int bisection_steps = 48;
};

struct Scene {
  uint64_t seed = 0;
  HumanParams human_params;
  ObjectKind object_kind = ObjectKind::kBox;
  double object_scale = 0.0;
  Rigid object_pose = Rigid::Identity();  // applied to the canonical object

  TriangleMesh human;   // posed figure, canonical scene frame
  TriangleMesh proxy;   // coarse body template standing in for a fitted model
  TriangleMesh object;  // placed object, canonical scene frame

  Bbox joint_bounds() const;
  // Exact surface-to-surface distance between human and placed object
  // (0 when touching or intersecting).
  double contact_gap() const;
};

// Deterministically builds one scene: seeded human and object, the object
// given a random rotation and dropped at a random offset, then translated
// along the object-center -> human-center line by bisection until first
// contact. Throws GeometryError when no placement yields a valid contact.
Scene compose_scene(uint64_t seed, int human_resolution,
                    const ContactParams& contact = ContactParams{});

struct ViewParams {
  int n_translations = 2;  // scene offsets in front of the fixed camera
  int n_views = 8;         // evenly spaced azimuths per translation
  double fit_margin = 1.35;  // frustum clearance factor around the human
};

// One retained view configuration. The camera realizes "rotate the scene by
// `azimuth` about the vertical axis through the human center, then shift it
// by `translation`" as extrinsics of the fixed base camera, so all scene
// geometry stays in the canonical frame.
struct ViewSpec {
  int translation_index = 0;
  Vec3 translation = Vec3::Zero();
  double azimuth = 0.0;
  PerspectiveCamera camera;
};

// Samples n_translations offsets that keep the human inside the base
// camera's frustum, crosses them with n_views azimuths, and retains exactly
// the configurations whose object silhouette is non-empty. Deterministic in
// seed. Throws GeometryError when every configuration is discarded.
std::vector<ViewSpec> place_views(const Scene& scene, const PerspectiveCamera& base,
                                  const ViewParams& vp, uint64_t seed);

}  // namespace hoir::scene
