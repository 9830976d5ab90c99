#pragma once

#include "hoir/common.hpp"
#include "hoir/geom/bvh.hpp"

namespace hoir::geom {

// Inside/outside by ray-crossing parity against a watertight mesh. The ray
// direction is jittered from `seed`; hits flagged as suspect (near an edge or
// a parallel triangle) trigger a retry with a fresh direction. Deterministic
// for a fixed seed. Throws GeometryError if the mesh is not watertight or if
// all retries stay degenerate.
bool occupancy(const Bvh& bvh, const Vec3& x, uint64_t seed, int max_retries = 32);

// Distance to the surface, negative inside. Sign comes from occupancy().
double signed_distance(const Bvh& bvh, const Vec3& x, uint64_t seed);

// Generalized winding number via summed signed solid angles
// (van Oosterom & Strackee). ~0 outside, ~1 inside for watertight meshes.
// Independent of the BVH parity path; used as a cross-check oracle.
double winding_number(const TriangleMesh& mesh, const Vec3& x);

}  // namespace hoir::geom
