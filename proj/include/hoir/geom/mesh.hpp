#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <array>
#include <string>
#include <vector>

#include "hoir/common.hpp"

namespace hoir::geom {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Rigid = Eigen::Isometry3d;
using Bbox = Eigen::AlignedBox3d;

// Indexed triangle soup. Carries every shape in the system: scans, proxy
// templates, reconstructions. Units are meters.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<Vec3> vertex_normals;  // optional, empty when absent
  bool watertight = false;

  bool empty() const { return faces.empty(); }
  size_t vertex_count() const { return vertices.size(); }
  size_t face_count() const { return faces.size(); }

  // Throws GeometryError on out-of-range or repeated face indices.
  void validate() const;

  Bbox bounds() const;
  Vec3 vertex_centroid() const;
  double surface_area() const;
  double face_area(size_t f) const;
  Vec3 face_normal(size_t f) const;  // unit, zero for degenerate faces

  void transform(const Rigid& t);
  void translate(const Vec3& t);
};

// True iff every edge is shared by exactly two faces with opposite
// orientation. Does not modify the mesh.
bool is_watertight(const TriangleMesh& mesh);

// Validates and stamps the watertight flag; throws if the check fails.
void require_watertight(TriangleMesh& mesh);

// Signed volume via divergence theorem; positive for outward orientation.
double signed_volume(const TriangleMesh& mesh);

// Splits a soup into connected components (vertices are not shared across
// components in any file this project writes).
std::vector<TriangleMesh> connected_components(const TriangleMesh& mesh);

// Concatenates meshes into one soup; watertight flag is the AND of inputs.
TriangleMesh merge(const std::vector<TriangleMesh>& parts);

// OBJ subset: v/vn/f lines, triangles only, 1-based indices.
TriangleMesh read_obj(const std::string& path);
void write_obj(const std::string& path, const TriangleMesh& mesh);

// Area-uniform surface point sampler: faces drawn by cumulative area, then a
// uniform barycentric draw. Holds a reference to the mesh; keep it alive.
class SurfaceSampler {
 public:
  explicit SurfaceSampler(const TriangleMesh& mesh);
  Vec3 sample(Rng& rng) const;
  // Sampled point plus the face normal at it.
  Vec3 sample(Rng& rng, Vec3& normal) const;
  std::vector<Vec3> sample_n(Rng& rng, size_t n) const;

 private:
  const TriangleMesh& mesh_;
  std::vector<double> cumulative_;
};

}  // namespace hoir::geom
