#pragma once

#include "hoir/common.hpp"
#include "hoir/geom/mesh.hpp"

namespace hoir::scene {

using geom::TriangleMesh;
using geom::Vec3;

// --- analytic object primitives, all watertight ---

TriangleMesh make_box(const Vec3& half_extents);
TriangleMesh make_icosphere(double radius, int subdivisions);
TriangleMesh make_torus(double major_r, double minor_r, int nu, int nv);
TriangleMesh make_cylinder(double radius, double height, int segments);
TriangleMesh make_capsule(double radius, double height, int stacks, int slices);
// Concave watertight L-shaped block, handy as a difficult test solid.
TriangleMesh make_lshape(double size);

enum class ObjectKind { kBox, kSphere, kTorus, kCylinder, kCapsule };

const char* object_kind_name(ObjectKind k);
ObjectKind parse_object_kind(const std::string& name);

// Seeded object: kind chosen uniformly, dimensions drawn from ranges scaled
// by `scale` (roughly the object's bounding radius).
TriangleMesh sample_object(Rng& rng, ObjectKind kind, double scale);

// --- procedural human ---

// Articulated capsule figure, ~1.7 units tall, pelvis at the origin, y up,
// facing +z. Limb angles in radians.
struct HumanParams {
  double shoulder_abduct[2] = {0.35, 0.35};  // left, right: arms away from torso
  double shoulder_swing[2] = {0.0, 0.0};     // arms forward/back
  double elbow_bend[2] = {0.3, 0.3};
  double leg_spread[2] = {0.06, 0.06};
  double knee_bend[2] = {0.08, 0.08};
  double torso_lean = 0.0;
  double bulk = 1.0;  // radius multiplier, ~0.9..1.1

  // Draw a plausible random pose/build.
  static HumanParams sample(Rng& rng);
};

// Smooth-min union of the figure's capsules; negative inside.
double human_sdf(const HumanParams& p, const Vec3& x);

// Watertight surface of the figure, marching cubes at `resolution` samples
// along the longest axis.
TriangleMesh make_human(const HumanParams& p, int resolution);

// Coarse template of the same figure: the SDF is extracted on a half-
// resolution grid with a stronger blend radius, giving a smoothed low-poly
// stand-in for prior computation.
TriangleMesh make_body_proxy(const HumanParams& p, int resolution);

}  // namespace hoir::scene
