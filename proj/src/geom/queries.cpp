#include "hoir/geom/queries.hpp"

#include <cmath>

namespace hoir::geom {

namespace {

Vec3 jitter_direction(Rng& rng) {
  // Uniform direction on the sphere; rejection-free via normal deviates.
  for (;;) {
    const Vec3 d(rng.normal(), rng.normal(), rng.normal());
    const double n = d.norm();
    if (n > 1e-6) return d / n;
  }
}

}  // namespace

bool occupancy(const Bvh& bvh, const Vec3& x, uint64_t seed, int max_retries) {
  if (!bvh.watertight()) throw GeometryError("occupancy: mesh is not watertight");
  if (!bvh.bounds().contains(x)) return false;

  Rng rng(derive_seed(seed, 0x6f636375 /* "occu" */));
  std::vector<RayHit> hits;
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    const Vec3 dir = jitter_direction(rng);
    hits.clear();
    bvh.ray_hits(x, dir, hits);
    bool clean = true;
    for (const RayHit& h : hits) {
      if (h.suspect) {
        clean = false;
        break;
      }
    }
    if (!clean) continue;
    // Guard against duplicate hits where the ray pierces a shared edge and
    // both incident triangles report an intersection at nearly the same t.
    int crossings = 0;
    double last_t = -1.0;
    for (const RayHit& h : hits) {
      if (last_t >= 0.0 && std::abs(h.t - last_t) < 1e-12 * std::max(1.0, h.t)) {
        clean = false;
        break;
      }
      last_t = h.t;
      ++crossings;
    }
    if (!clean) continue;
    return (crossings % 2) == 1;
  }
  throw GeometryError("occupancy: all ray casts degenerate");
}

double signed_distance(const Bvh& bvh, const Vec3& x, uint64_t seed) {
  const ClosestPoint cp = bvh.closest_point(x);
  const bool inside = occupancy(bvh, x, seed);
  return inside ? -cp.dist : cp.dist;
}

double winding_number(const TriangleMesh& mesh, const Vec3& x) {
  double total = 0.0;
  for (const auto& f : mesh.faces) {
    const Vec3 a = mesh.vertices[f[0]] - x;
    const Vec3 b = mesh.vertices[f[1]] - x;
    const Vec3 c = mesh.vertices[f[2]] - x;
    const double la = a.norm(), lb = b.norm(), lc = c.norm();
    const double num = a.dot(b.cross(c));
    const double den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
    total += 2.0 * std::atan2(num, den);
  }
  return total / (4.0 * M_PI);
}

}  // namespace hoir::geom
