#pragma once

#include "hoir/geom/mesh.hpp"

namespace hoir::geom {

struct ClosestPoint {
  Vec3 point = Vec3::Zero();
  double dist = 0.0;
  int triangle = -1;
};

struct RayHit {
  double t = 0.0;
  int triangle = -1;
  // Barycentric coordinate closest to an edge, or a near-parallel triangle;
  // parity queries re-jitter when any hit is suspect.
  bool suspect = false;
};

// Closest point on triangle abc to p (Ericson, Real-Time Collision Detection).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

// Minimum distance between two segments [p0,p1] and [q0,q1].
double segment_segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1);

// Minimum distance between two triangles (0 when they intersect).
double triangle_triangle_distance(const Vec3& a0, const Vec3& a1, const Vec3& a2, const Vec3& b0,
                                  const Vec3& b1, const Vec3& b2);

// Static bounding-volume hierarchy over a triangle mesh. Immutable after
// construction; all queries are const and safe to run concurrently.
class Bvh {
 public:
  explicit Bvh(const TriangleMesh& mesh);

  size_t triangle_count() const { return tri_count_; }
  bool watertight() const { return watertight_; }
  const Bbox& bounds() const { return root_bounds_; }

  ClosestPoint closest_point(const Vec3& x) const;

  // All intersections with the ray origin + t*dir, t > 0, appended to hits.
  void ray_hits(const Vec3& origin, const Vec3& dir, std::vector<RayHit>& hits) const;

  // Triangle corners by original face index.
  void triangle(int f, Vec3& a, Vec3& b, Vec3& c) const;

  // Exact minimum surface-to-surface distance between two hierarchies, with
  // `b_to_world` applied to the second (0 when the surfaces intersect).
  static double distance(const Bvh& a, const Bvh& b, const Rigid& b_to_world);

 private:
  struct Node {
    Eigen::Vector3d lo, hi;
    int left = -1, right = -1;  // children, -1 on leaves
    int start = 0, count = 0;   // leaf triangle range in order_
  };

  int build(std::vector<int>& idx, int begin, int end, std::vector<Vec3>& centroids);
  double box_dist2(const Node& n, const Vec3& x) const;

  std::vector<Node> nodes_;
  std::vector<int> order_;        // triangle index permutation, leaf ranges
  std::vector<double> verts_;     // 9 doubles per triangle, in order_ layout
  std::vector<int> face_of_;      // order slot -> original face index
  size_t tri_count_ = 0;
  bool watertight_ = false;
  Bbox root_bounds_;
};

}  // namespace hoir::geom
