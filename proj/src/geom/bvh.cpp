#include "hoir/geom/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hoir::geom {

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return a + v * ab;
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return a + w * ac;
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return b + w * (c - b);
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return a + v * ab + w * ac;
}

Bvh::Bvh(const TriangleMesh& mesh) {
  mesh.validate();
  tri_count_ = mesh.faces.size();
  watertight_ = mesh.watertight;
  if (tri_count_ == 0) throw GeometryError("bvh: empty mesh");

  std::vector<int> idx(tri_count_);
  std::vector<Vec3> centroids(tri_count_);
  for (size_t f = 0; f < tri_count_; ++f) {
    idx[f] = static_cast<int>(f);
    const auto& t = mesh.faces[f];
    centroids[f] = (mesh.vertices[t[0]] + mesh.vertices[t[1]] + mesh.vertices[t[2]]) / 3.0;
  }
  nodes_.reserve(2 * tri_count_);

  // Temporarily stash mesh geometry so build() can compute node bounds.
  verts_.resize(9 * tri_count_);
  face_of_.resize(tri_count_);
  for (size_t f = 0; f < tri_count_; ++f) {
    const auto& t = mesh.faces[f];
    for (int k = 0; k < 3; ++k)
      for (int d = 0; d < 3; ++d) verts_[9 * f + 3 * k + d] = mesh.vertices[t[k]][d];
  }

  const int root = build(idx, 0, static_cast<int>(tri_count_), centroids);
  (void)root;  // root is always node 0

  // Re-pack triangle data in traversal order for cache-friendly leaves.
  order_ = idx;
  std::vector<double> packed(9 * tri_count_);
  for (size_t slot = 0; slot < tri_count_; ++slot) {
    std::copy_n(verts_.begin() + 9 * order_[slot], 9, packed.begin() + 9 * slot);
    face_of_[slot] = order_[slot];
  }
  verts_ = std::move(packed);

  root_bounds_ = Bbox(Vec3(nodes_[0].lo), Vec3(nodes_[0].hi));
}

int Bvh::build(std::vector<int>& idx, int begin, int end, std::vector<Vec3>& centroids) {
  Node node;
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  Vec3 clo = lo, chi = hi;
  for (int i = begin; i < end; ++i) {
    const int f = idx[i];
    for (int k = 0; k < 3; ++k) {
      const Vec3 v(verts_[9 * f + 3 * k], verts_[9 * f + 3 * k + 1], verts_[9 * f + 3 * k + 2]);
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    clo = clo.cwiseMin(centroids[f]);
    chi = chi.cwiseMax(centroids[f]);
  }
  node.lo = lo;
  node.hi = hi;

  const int count = end - begin;
  constexpr int kLeafSize = 4;
  const int self = static_cast<int>(nodes_.size());
  nodes_.push_back(node);

  int axis = 0;
  (chi - clo).maxCoeff(&axis);
  if (count <= kLeafSize || (chi - clo)[axis] <= 0.0) {
    nodes_[self].start = begin;
    nodes_[self].count = count;
    return self;
  }

  const int mid = begin + count / 2;
  std::nth_element(idx.begin() + begin, idx.begin() + mid, idx.begin() + end,
                   [&](int a, int b) { return centroids[a][axis] < centroids[b][axis]; });
  const int l = build(idx, begin, mid, centroids);
  const int r = build(idx, mid, end, centroids);
  nodes_[self].left = l;
  nodes_[self].right = r;
  return self;
}

double Bvh::box_dist2(const Node& n, const Vec3& x) const {
  double d2 = 0.0;
  for (int d = 0; d < 3; ++d) {
    const double lo = n.lo[d] - x[d];
    const double hi = x[d] - n.hi[d];
    const double e = std::max({lo, hi, 0.0});
    d2 += e * e;
  }
  return d2;
}

ClosestPoint Bvh::closest_point(const Vec3& x) const {
  ClosestPoint best;
  best.dist = std::numeric_limits<double>::infinity();
  double best2 = best.dist;

  struct Entry {
    int node;
    double d2;
  };
  Entry stack[128];
  int top = 0;
  stack[top++] = {0, box_dist2(nodes_[0], x)};

  while (top > 0) {
    const Entry e = stack[--top];
    if (e.d2 >= best2) continue;
    const Node& n = nodes_[e.node];
    if (n.left < 0) {
      for (int i = n.start; i < n.start + n.count; ++i) {
        const double* v = &verts_[9 * i];
        const Vec3 a(v[0], v[1], v[2]), b(v[3], v[4], v[5]), c(v[6], v[7], v[8]);
        const Vec3 q = closest_point_on_triangle(x, a, b, c);
        const double d2 = (q - x).squaredNorm();
        if (d2 < best2) {
          best2 = d2;
          best.point = q;
          best.triangle = face_of_[i];
        }
      }
      continue;
    }
    Entry l{n.left, box_dist2(nodes_[n.left], x)};
    Entry r{n.right, box_dist2(nodes_[n.right], x)};
    if (l.d2 > r.d2) std::swap(l, r);  // nearer child popped first
    stack[top++] = r;
    stack[top++] = l;
  }
  best.dist = std::sqrt(best2);
  return best;
}

void Bvh::ray_hits(const Vec3& origin, const Vec3& dir, std::vector<RayHit>& hits) const {
  const Vec3 inv = dir.cwiseInverse();  // IEEE infs handle axis-parallel rays

  int stack[128];
  int top = 0;
  stack[top++] = 0;

  constexpr double kDetEps = 1e-12;
  constexpr double kEdgeEps = 1e-9;

  while (top > 0) {
    const Node& n = nodes_[stack[--top]];
    // Slab test.
    double tmin = 0.0, tmax = std::numeric_limits<double>::infinity();
    bool miss = false;
    for (int d = 0; d < 3; ++d) {
      double t0 = (n.lo[d] - origin[d]) * inv[d];
      double t1 = (n.hi[d] - origin[d]) * inv[d];
      if (t0 > t1) std::swap(t0, t1);
      if (std::isnan(t0) || std::isnan(t1)) continue;  // origin on slab plane, dir parallel
      tmin = std::max(tmin, t0);
      tmax = std::min(tmax, t1);
      if (tmin > tmax) {
        miss = true;
        break;
      }
    }
    if (miss) continue;

    if (n.left >= 0) {
      stack[top++] = n.left;
      stack[top++] = n.right;
      continue;
    }
    for (int i = n.start; i < n.start + n.count; ++i) {
      const double* v = &verts_[9 * i];
      const Vec3 a(v[0], v[1], v[2]), b(v[3], v[4], v[5]), c(v[6], v[7], v[8]);
      // Moeller-Trumbore.
      const Vec3 e1 = b - a, e2 = c - a;
      const Vec3 pv = dir.cross(e2);
      const double det = e1.dot(pv);
      const double scale = std::abs(det) / std::max(e1.norm() * e2.norm() * dir.norm(), 1e-300);
      if (std::abs(det) < kDetEps) {
        // Near-parallel ray: a crossing cannot be resolved. If the ray skims
        // the triangle's plane near the triangle itself, flag it so the
        // caller re-casts with a different jitter.
        const Vec3 nrm = e1.cross(e2);
        const double nn = nrm.norm();
        if (nn > 0.0) {
          const double plane_dist = std::abs(nrm.dot(origin - a)) / nn;
          const double extent = std::sqrt(std::max(e1.squaredNorm(), e2.squaredNorm()));
          if (plane_dist < 1e-7 * std::max(extent, 1.0)) {
            const Vec3 center = (a + b + c) / 3.0;
            const double t_near = std::max(dir.dot(center - origin) / dir.squaredNorm(), 1e-12);
            hits.push_back({t_near, face_of_[i], true});
          }
        }
        continue;
      }
      const double inv_det = 1.0 / det;
      const Vec3 tv = origin - a;
      const double u = tv.dot(pv) * inv_det;
      if (u < -kEdgeEps || u > 1.0 + kEdgeEps) continue;
      const Vec3 qv = tv.cross(e1);
      const double w = dir.dot(qv) * inv_det;
      if (w < -kEdgeEps || u + w > 1.0 + kEdgeEps) continue;
      const double t = e2.dot(qv) * inv_det;
      if (t <= 0.0) continue;
      RayHit h;
      h.t = t;
      h.triangle = face_of_[i];
      const double margin = std::min({u, w, 1.0 - u - w});
      h.suspect = margin < 1e-6 || scale < 1e-8;
      hits.push_back(h);
    }
  }
  std::sort(hits.begin(), hits.end(), [](const RayHit& a, const RayHit& b) { return a.t < b.t; });
}

double segment_segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1) {
  // Ericson 5.1.9: closest points of two segments.
  const Vec3 d1 = p1 - p0, d2 = q1 - q0, r = p0 - q0;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s = 0.0, t = 0.0;
  constexpr double kEps = 1e-30;
  if (a <= kEps && e <= kEps) return r.norm();
  if (a <= kEps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= kEps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      if (denom > kEps) s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((p0 + s * d1) - (q0 + t * d2)).norm();
}

double triangle_triangle_distance(const Vec3& a0, const Vec3& a1, const Vec3& a2, const Vec3& b0,
                                  const Vec3& b1, const Vec3& b2) {
  const Vec3 A[3] = {a0, a1, a2}, B[3] = {b0, b1, b2};
  double best = std::numeric_limits<double>::infinity();
  // Vertex-to-face both ways covers face-interior contacts...
  for (int i = 0; i < 3; ++i) {
    best = std::min(best, (closest_point_on_triangle(A[i], b0, b1, b2) - A[i]).norm());
    best = std::min(best, (closest_point_on_triangle(B[i], a0, a1, a2) - B[i]).norm());
  }
  // ...and edge-to-edge covers skew-edge contacts and crossings.
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      best = std::min(best, segment_segment_distance(A[i], A[(i + 1) % 3], B[j], B[(j + 1) % 3]));
  // Edge pairs report ~0 when triangles properly intersect, because any
  // penetrating edge crosses the other triangle's plane inside it, and some
  // edge-edge or vertex-face pair realizes distance 0 up to roundoff.
  return best;
}

namespace {

Bbox transformed_box(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, const Rigid& xf) {
  Bbox out;
  for (int i = 0; i < 8; ++i)
    out.extend(xf * Vec3(i & 1 ? hi.x() : lo.x(), i & 2 ? hi.y() : lo.y(), i & 4 ? hi.z() : lo.z()));
  return out;
}

double box_box_dist(const Bbox& a, const Bbox& b) {
  double d2 = 0.0;
  for (int d = 0; d < 3; ++d) {
    const double gap = std::max({a.min()[d] - b.max()[d], b.min()[d] - a.max()[d], 0.0});
    d2 += gap * gap;
  }
  return std::sqrt(d2);
}

}  // namespace

double Bvh::distance(const Bvh& a, const Bvh& b, const Rigid& b_to_world) {
  double best = std::numeric_limits<double>::infinity();

  struct Pair {
    int na, nb;
    double lower;
  };
  std::vector<Pair> stack;
  stack.reserve(256);

  auto node_box = [&](const Bvh& t, int n, bool transform) {
    const Node& nd = t.nodes_[n];
    if (!transform) return Bbox(Vec3(nd.lo), Vec3(nd.hi));
    return transformed_box(nd.lo, nd.hi, b_to_world);
  };

  auto push = [&](int na, int nb) {
    const double lower = box_box_dist(node_box(a, na, false), node_box(b, nb, true));
    if (lower < best) stack.push_back({na, nb, lower});
  };
  push(0, 0);

  while (!stack.empty()) {
    const Pair p = stack.back();
    stack.pop_back();
    if (p.lower >= best) continue;
    const Node& na = a.nodes_[p.na];
    const Node& nb = b.nodes_[p.nb];
    const bool la = na.left < 0, lb = nb.left < 0;
    if (la && lb) {
      for (int i = na.start; i < na.start + na.count; ++i) {
        const double* va = &a.verts_[9 * i];
        const Vec3 a0(va[0], va[1], va[2]), a1(va[3], va[4], va[5]), a2(va[6], va[7], va[8]);
        for (int j = nb.start; j < nb.start + nb.count; ++j) {
          const double* vb = &b.verts_[9 * j];
          const Vec3 b0 = b_to_world * Vec3(vb[0], vb[1], vb[2]);
          const Vec3 b1 = b_to_world * Vec3(vb[3], vb[4], vb[5]);
          const Vec3 b2 = b_to_world * Vec3(vb[6], vb[7], vb[8]);
          best = std::min(best, triangle_triangle_distance(a0, a1, a2, b0, b1, b2));
          if (best == 0.0) return 0.0;
        }
      }
      continue;
    }
    // Split the node with the larger box extent.
    const double ea = (na.hi - na.lo).sum(), eb = (nb.hi - nb.lo).sum();
    if (lb || (!la && ea >= eb)) {
      push(na.left, p.nb);
      push(na.right, p.nb);
    } else {
      push(p.na, nb.left);
      push(p.na, nb.right);
    }
  }
  return best;
}

void Bvh::triangle(int f, Vec3& a, Vec3& b, Vec3& c) const {
  // Linear scan is fine: used only in tests/diagnostics.
  for (size_t i = 0; i < tri_count_; ++i) {
    if (face_of_[i] == f) {
      const double* v = &verts_[9 * i];
      a = Vec3(v[0], v[1], v[2]);
      b = Vec3(v[3], v[4], v[5]);
      c = Vec3(v[6], v[7], v[8]);
      return;
    }
  }
  throw GeometryError("bvh: unknown triangle index");
}

}  // namespace hoir::geom
