#pragma once

#include <functional>

#include "hoir/geom/mesh.hpp"

namespace hoir::surface {

using geom::Bbox;
using geom::TriangleMesh;
using geom::Vec3;

// Regular scalar grid; dims counts samples per axis (cells = dims - 1).
// Linear index is x-fastest: (z * ny + y) * nx + x.
struct ScalarGrid {
  Eigen::Vector3i dims = Eigen::Vector3i::Zero();
  Vec3 origin = Vec3::Zero();
  Vec3 spacing = Vec3::Ones();
  std::vector<float> values;

  ScalarGrid() = default;
  ScalarGrid(const Eigen::Vector3i& d, const Vec3& org, const Vec3& sp)
      : dims(d), origin(org), spacing(sp),
        values(static_cast<size_t>(d.x()) * d.y() * d.z(), 0.0f) {}

  size_t index(int x, int y, int z) const {
    return (static_cast<size_t>(z) * dims.y() + y) * dims.x() + x;
  }
  float at(int x, int y, int z) const { return values[index(x, y, z)]; }
  float& at(int x, int y, int z) { return values[index(x, y, z)]; }
  Vec3 position(int x, int y, int z) const {
    return origin + Vec3(x * spacing.x(), y * spacing.y(), z * spacing.z());
  }

  // Grid covering `box` with n samples along the longest axis (others scaled
  // to keep spacing roughly isotropic), expanded by `margin` fraction.
  static ScalarGrid covering(const Bbox& box, int n, double margin = 0.05);

  // Evaluate f at every grid sample.
  void fill(const std::function<float(const Vec3&)>& f);
};

// Extract the iso-surface where values cross `iso`; samples with value > iso
// count as inside. Vertices on shared cube edges are welded, so a field that
// is entirely below iso on the grid boundary yields a watertight mesh with
// outward orientation (normals toward lower values).
//
// By default extraction is permissive: a field that never crosses iso yields
// an empty mesh, a surface clipped by the grid boundary comes back open, and
// the result's watertight flag records whether it closed. With
// `require_closed` the function instead throws GeometryError on boundary
// contact, on an empty result, and on any non-watertight output — the right
// contract when the field is known to be a closed solid.
TriangleMesh marching_cubes(const ScalarGrid& grid, float iso, bool require_closed = false);

}  // namespace hoir::surface
