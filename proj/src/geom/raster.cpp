#include "hoir/geom/raster.hpp"

#include <algorithm>
#include <cmath>

namespace hoir::geom {

namespace {

struct ClipVert {
  Vec3 p;  // camera space
};

// Sutherland-Hodgman against z >= z_near. Input triangle, output 0-4 verts.
int clip_near(const ClipVert in[3], ClipVert out[4], double z_near) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const ClipVert& cur = in[i];
    const ClipVert& nxt = in[(i + 1) % 3];
    const bool cin = cur.p.z() >= z_near;
    const bool nin = nxt.p.z() >= z_near;
    if (cin) out[n++] = cur;
    if (cin != nin) {
      const double t = (z_near - cur.p.z()) / (nxt.p.z() - cur.p.z());
      out[n++] = {cur.p + t * (nxt.p - cur.p)};
    }
  }
  return n;
}

inline double edge_fn(double ax, double ay, double bx, double by, double px, double py) {
  return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

void fill_triangle(const Vec3& a, const Vec3& b, const Vec3& c, const PerspectiveCamera& cam,
                   int8_t entity_id, int32_t face_id, DepthBuffer& buf) {
  // Screen positions and 1/z for perspective-correct depth.
  const double za = a.z(), zb = b.z(), zc = c.z();
  const double ax = cam.fx * a.x() / za + cam.cx, ay = cam.fy * a.y() / za + cam.cy;
  const double bx = cam.fx * b.x() / zb + cam.cx, by = cam.fy * b.y() / zb + cam.cy;
  const double cx = cam.fx * c.x() / zc + cam.cx, cy = cam.fy * c.y() / zc + cam.cy;
  const double wa = 1.0 / za, wb = 1.0 / zb, wc = 1.0 / zc;

  double area = edge_fn(ax, ay, bx, by, cx, cy);
  if (area == 0.0) return;

  const int x0 = std::max(0, static_cast<int>(std::floor(std::min({ax, bx, cx}))));
  const int x1 = std::min(buf.width - 1, static_cast<int>(std::ceil(std::max({ax, bx, cx}))));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min({ay, by, cy}))));
  const int y1 = std::min(buf.height - 1, static_cast<int>(std::ceil(std::max({ay, by, cy}))));
  if (x0 > x1 || y0 > y1) return;

  const double inv_area = 1.0 / area;
  for (int py = y0; py <= y1; ++py) {
    const double sy = py + 0.5;
    for (int px = x0; px <= x1; ++px) {
      const double sx = px + 0.5;
      // Barycentric weights; sign of area makes both windings fill.
      double l0 = edge_fn(bx, by, cx, cy, sx, sy) * inv_area;
      double l1 = edge_fn(cx, cy, ax, ay, sx, sy) * inv_area;
      double l2 = edge_fn(ax, ay, bx, by, sx, sy) * inv_area;
      if (l0 < 0.0 || l1 < 0.0 || l2 < 0.0) continue;
      const double w = l0 * wa + l1 * wb + l2 * wc;
      const float z = static_cast<float>(1.0 / w);
      const size_t idx = buf.at(px, py);
      if (z < buf.depth[idx]) {
        buf.depth[idx] = z;
        buf.entity[idx] = entity_id;
        buf.face[idx] = face_id;
      }
    }
  }
}

}  // namespace

void rasterize(const TriangleMesh& mesh, const PerspectiveCamera& cam, int8_t entity_id,
               DepthBuffer& buf, double z_near) {
  if (buf.width != cam.width || buf.height != cam.height)
    throw GeometryError("rasterize: buffer/camera size mismatch");
  if (entity_id < 0) throw GeometryError("rasterize: entity id must be >= 0");

  std::vector<Vec3> cam_verts(mesh.vertices.size());
  for (size_t i = 0; i < mesh.vertices.size(); ++i) cam_verts[i] = cam.to_camera(mesh.vertices[i]);

  for (size_t fi = 0; fi < mesh.faces.size(); ++fi) {
    const auto& f = mesh.faces[fi];
    const ClipVert tri[3] = {{cam_verts[f[0]]}, {cam_verts[f[1]]}, {cam_verts[f[2]]}};
    ClipVert poly[4];
    const int n = clip_near(tri, poly, z_near);
    for (int k = 2; k < n; ++k)
      fill_triangle(poly[0].p, poly[k - 1].p, poly[k].p, cam, entity_id,
                    static_cast<int32_t>(fi), buf);
  }
}

bool visible(const DepthBuffer& buf, const PerspectiveCamera& cam, const Vec3& x, double eps) {
  PixelCoord px;
  if (!cam.try_project(x, px)) return false;
  const int ix = static_cast<int>(std::floor(px.u));
  const int iy = static_cast<int>(std::floor(px.v));
  if (ix < 0 || ix >= buf.width || iy < 0 || iy >= buf.height) return false;
  return px.depth <= buf.depth[buf.at(ix, iy)] + eps;
}

}  // namespace hoir::geom
