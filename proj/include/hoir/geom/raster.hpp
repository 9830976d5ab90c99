#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "hoir/geom/camera.hpp"
#include "hoir/geom/mesh.hpp"

namespace hoir::geom {

// Per-pixel depth + entity id + source triangle. Empty pixels hold +inf/-1/-1.
struct DepthBuffer {
  int width = 0, height = 0;
  std::vector<float> depth;
  std::vector<int8_t> entity;
  std::vector<int32_t> face;

  DepthBuffer() = default;
  DepthBuffer(int w, int h)
      : width(w),
        height(h),
        depth(static_cast<size_t>(w) * h, std::numeric_limits<float>::infinity()),
        entity(static_cast<size_t>(w) * h, int8_t{-1}),
        face(static_cast<size_t>(w) * h, int32_t{-1}) {}

  size_t at(int x, int y) const { return static_cast<size_t>(y) * width + x; }
  bool empty_at(int x, int y) const { return entity[at(x, y)] < 0; }
};

// Rasterize every triangle into the buffer with a standard z-test. Depth is
// interpolated perspective-correctly (linear in 1/z); triangles are clipped
// against the near plane. Winding does not matter: both orientations fill.
void rasterize(const TriangleMesh& mesh, const PerspectiveCamera& cam, int8_t entity_id,
               DepthBuffer& buf, double z_near = 1e-3);

// A world point is visible iff it projects inside the image in front of the
// camera and its depth is within eps of the stored depth at its pixel.
bool visible(const DepthBuffer& buf, const PerspectiveCamera& cam, const Vec3& x, double eps);

}  // namespace hoir::geom
