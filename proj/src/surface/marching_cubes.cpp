#include "hoir/surface/marching_cubes.hpp"

#include <cmath>
#include <unordered_map>

#include "mc_tables.hpp"

namespace hoir::surface {

using hoir::GeometryError;

ScalarGrid ScalarGrid::covering(const Bbox& box, int n, double margin) {
  if (n < 2) throw GeometryError("ScalarGrid::covering: need at least 2 samples per axis");
  const Vec3 pad = box.diagonal() * margin;
  const Vec3 lo = box.min() - pad, hi = box.max() + pad;
  const Vec3 extent = hi - lo;
  const double longest = extent.maxCoeff();
  Eigen::Vector3i dims;
  for (int d = 0; d < 3; ++d)
    dims[d] = std::max(2, static_cast<int>(std::lround((n - 1) * extent[d] / longest)) + 1);
  ScalarGrid g;
  g.dims = dims;
  g.origin = lo;
  for (int d = 0; d < 3; ++d) g.spacing[d] = extent[d] / (dims[d] - 1);
  g.values.assign(static_cast<size_t>(dims.x()) * dims.y() * dims.z(), 0.0f);
  return g;
}

void ScalarGrid::fill(const std::function<float(const Vec3&)>& f) {
  for (int z = 0; z < dims.z(); ++z)
    for (int y = 0; y < dims.y(); ++y)
      for (int x = 0; x < dims.x(); ++x) at(x, y, z) = f(position(x, y, z));
}

namespace {

// Cube corners: 0-3 bottom loop, 4-7 top loop, vertical edges connect i,i+4.
constexpr int kCornerOffset[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                     {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdgeCorner[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                    {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

// Trilinear interpolation with coordinates clamped to the grid.
float sample_trilinear(const ScalarGrid& g, const Vec3& p) {
  Vec3 q = (p - g.origin).cwiseQuotient(g.spacing);
  int ix[3];
  double fr[3];
  for (int d = 0; d < 3; ++d) {
    const double qc = std::clamp(q[d], 0.0, static_cast<double>(g.dims[d] - 1));
    ix[d] = std::min(static_cast<int>(qc), g.dims[d] - 2);
    fr[d] = qc - ix[d];
  }
  float acc = 0.0f;
  for (int k = 0; k < 8; ++k) {
    const int dx = k & 1, dy = (k >> 1) & 1, dz = (k >> 2) & 1;
    const double w = (dx ? fr[0] : 1.0 - fr[0]) * (dy ? fr[1] : 1.0 - fr[1]) *
                     (dz ? fr[2] : 1.0 - fr[2]);
    acc += static_cast<float>(w) * g.at(ix[0] + dx, ix[1] + dy, ix[2] + dz);
  }
  return acc;
}

// Majority vote over sampled faces: outward normals must point toward lower
// field values, i.e. against the local gradient. Positive means correct.
int orientation_vote(const TriangleMesh& mesh, const ScalarGrid& grid) {
  const double h = 0.25 * grid.spacing.minCoeff();
  const size_t stride = std::max<size_t>(1, mesh.faces.size() / 16);
  int vote = 0;
  for (size_t f = 0; f < mesh.faces.size(); f += stride) {
    const Vec3 n = mesh.face_normal(f);
    if (n.squaredNorm() < 0.5) continue;  // degenerate face
    const auto& tri = mesh.faces[f];
    const Vec3 c =
        (mesh.vertices[tri[0]] + mesh.vertices[tri[1]] + mesh.vertices[tri[2]]) / 3.0;
    Vec3 grad;
    for (int d = 0; d < 3; ++d) {
      Vec3 e = Vec3::Zero();
      e[d] = h;
      grad[d] = sample_trilinear(grid, c + e) - sample_trilinear(grid, c - e);
    }
    const double along = n.dot(grad);
    if (along < 0.0)
      ++vote;
    else if (along > 0.0)
      --vote;
  }
  return vote;
}

}  // namespace

TriangleMesh marching_cubes(const ScalarGrid& grid, float iso, bool require_closed) {
  const int nx = grid.dims.x(), ny = grid.dims.y(), nz = grid.dims.z();
  if (nx < 2 || ny < 2 || nz < 2) throw GeometryError("marching_cubes: grid too small");

  // A surface touching the grid boundary cannot close; reject early.
  if (require_closed) {
    for (int z = 0; z < nz; ++z)
      for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
          if (x > 0 && x < nx - 1 && y > 0 && y < ny - 1 && z > 0 && z < nz - 1) continue;
          if (grid.at(x, y, z) > iso)
            throw GeometryError("marching_cubes: inside region touches grid boundary");
        }
  }

  TriangleMesh mesh;
  // Weld vertices by global edge id: base-sample linear index * 3 + axis.
  std::unordered_map<uint64_t, int> edge_vertex;
  edge_vertex.reserve(4096);

  auto edge_key = [&](int cx, int cy, int cz, int edge) -> uint64_t {
    const int* c0 = kCornerOffset[kEdgeCorner[edge][0]];
    const int* c1 = kCornerOffset[kEdgeCorner[edge][1]];
    const int x0 = cx + c0[0], y0 = cy + c0[1], z0 = cz + c0[2];
    const int x1 = cx + c1[0], y1 = cy + c1[1], z1 = cz + c1[2];
    int axis;
    int bx = x0, by = y0, bz = z0;
    if (x0 != x1) {
      axis = 0;
      bx = std::min(x0, x1);
    } else if (y0 != y1) {
      axis = 1;
      by = std::min(y0, y1);
    } else {
      axis = 2;
      bz = std::min(z0, z1);
    }
    return (static_cast<uint64_t>(grid.index(bx, by, bz)) << 2) | static_cast<uint64_t>(axis);
  };

  float corner_val[8];
  Vec3 corner_pos[8];
  int edge_idx[12];

  for (int cz = 0; cz < nz - 1; ++cz) {
    for (int cy = 0; cy < ny - 1; ++cy) {
      for (int cx = 0; cx < nx - 1; ++cx) {
        int cube = 0;
        for (int k = 0; k < 8; ++k) {
          const int* o = kCornerOffset[k];
          corner_val[k] = grid.at(cx + o[0], cy + o[1], cz + o[2]);
          corner_pos[k] = grid.position(cx + o[0], cy + o[1], cz + o[2]);
          if (corner_val[k] > iso) cube |= 1 << k;
        }
        const int edges = detail::kEdgeTable[cube];
        if (edges == 0) continue;

        for (int e = 0; e < 12; ++e) {
          if (!(edges & (1 << e))) continue;
          const uint64_t key = edge_key(cx, cy, cz, e);
          auto it = edge_vertex.find(key);
          if (it != edge_vertex.end()) {
            edge_idx[e] = it->second;
            continue;
          }
          const int a = kEdgeCorner[e][0], b = kEdgeCorner[e][1];
          const float va = corner_val[a], vb = corner_val[b];
          double t = 0.5;
          if (std::abs(vb - va) > 1e-12f) t = (iso - va) / (vb - va);
          t = std::clamp(t, 0.0, 1.0);
          const Vec3 p = corner_pos[a] + t * (corner_pos[b] - corner_pos[a]);
          const int vi = static_cast<int>(mesh.vertices.size());
          mesh.vertices.push_back(p);
          edge_vertex.emplace(key, vi);
          edge_idx[e] = vi;
        }

        const int* tris = detail::kTriTable[cube];
        for (int k = 0; tris[k] >= 0; k += 3) {
          const int i0 = edge_idx[tris[k]], i1 = edge_idx[tris[k + 1]], i2 = edge_idx[tris[k + 2]];
          if (i0 == i1 || i1 == i2 || i0 == i2) continue;  // collapsed at iso == corner value
          mesh.faces.push_back({i0, i1, i2});
        }
      }
    }
  }

  if (mesh.faces.empty()) {
    if (require_closed) throw GeometryError("marching_cubes: field never crosses iso level");
    return mesh;
  }

  // The tables above are written for the "inside below iso" convention, and
  // we classify inside as value > iso, so orientation may come out flipped;
  // normalize globally. A closed surface gets the exact signed-volume test;
  // an open sheet has no meaningful volume, so fall back to checking face
  // normals against the sampled field gradient.
  const bool closed = geom::is_watertight(mesh);
  const bool flipped =
      closed ? geom::signed_volume(mesh) < 0.0 : orientation_vote(mesh, grid) < 0;
  if (flipped)
    for (auto& f : mesh.faces) std::swap(f[1], f[2]);

  if (require_closed)
    geom::require_watertight(mesh);
  else
    mesh.watertight = closed;
  return mesh;
}

}  // namespace hoir::surface
