#include "hoir/scene/primitives.hpp"

#include <cmath>
#include <map>

#include "hoir/surface/marching_cubes.hpp"

namespace hoir::scene {

using hoir::GeometryError;
using geom::require_watertight;

TriangleMesh make_box(const Vec3& he) {
  if ((he.array() <= 0.0).any()) throw GeometryError("make_box: extents must be positive");
  TriangleMesh m;
  for (int i = 0; i < 8; ++i)
    m.vertices.emplace_back((i & 1 ? he.x() : -he.x()), (i & 2 ? he.y() : -he.y()),
                            (i & 4 ? he.z() : -he.z()));
  // Outward CCW faces, two per side.
  const int quads[6][4] = {{0, 2, 3, 1},   // -z
                           {4, 5, 7, 6},   // +z
                           {0, 1, 5, 4},   // -y
                           {2, 6, 7, 3},   // +y
                           {0, 4, 6, 2},   // -x
                           {1, 3, 7, 5}};  // +x
  for (const auto& q : quads) {
    m.faces.push_back({q[0], q[1], q[2]});
    m.faces.push_back({q[0], q[2], q[3]});
  }
  require_watertight(m);
  return m;
}

TriangleMesh make_icosphere(double radius, int subdivisions) {
  if (radius <= 0.0) throw GeometryError("make_icosphere: radius must be positive");
  if (subdivisions < 0 || subdivisions > 6) throw GeometryError("make_icosphere: bad subdivision");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriangleMesh m;
  m.vertices = {{-1, t, 0},  {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
                {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},
             {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},   {3, 4, 2},
             {3, 2, 6},  {3, 6, 8},  {3, 8, 9},   {4, 9, 5},  {2, 4, 11},  {6, 2, 10},
             {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const int v = static_cast<int>(m.vertices.size());
      m.vertices.push_back((m.vertices[a] + m.vertices[b]) * 0.5);
      midpoint.emplace(key, v);
      return v;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(m.faces.size() * 4);
    for (const auto& f : m.faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    m.faces = std::move(next);
  }
  for (auto& v : m.vertices) v = v.normalized() * radius;
  require_watertight(m);
  return m;
}

TriangleMesh make_torus(double major_r, double minor_r, int nu, int nv) {
  if (major_r <= minor_r || minor_r <= 0.0)
    throw GeometryError("make_torus: need major_r > minor_r > 0");
  if (nu < 3 || nv < 3) throw GeometryError("make_torus: need at least 3 segments");
  TriangleMesh m;
  for (int i = 0; i < nu; ++i) {
    const double u = 2.0 * M_PI * i / nu;
    for (int j = 0; j < nv; ++j) {
      const double v = 2.0 * M_PI * j / nv;
      const double r = major_r + minor_r * std::cos(v);
      m.vertices.emplace_back(r * std::cos(u), minor_r * std::sin(v), r * std::sin(u));
    }
  }
  auto idx = [&](int i, int j) { return (i % nu) * nv + (j % nv); };
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nv; ++j) {
      const int a = idx(i, j), b = idx(i + 1, j), c = idx(i + 1, j + 1), d = idx(i, j + 1);
      m.faces.push_back({a, c, b});
      m.faces.push_back({a, d, c});
    }
  require_watertight(m);
  return m;
}

TriangleMesh make_cylinder(double radius, double height, int segments) {
  if (radius <= 0.0 || height <= 0.0) throw GeometryError("make_cylinder: bad dimensions");
  if (segments < 3) throw GeometryError("make_cylinder: need at least 3 segments");
  TriangleMesh m;
  const double h2 = height / 2.0;
  for (int i = 0; i < segments; ++i) {
    const double a = 2.0 * M_PI * i / segments;
    m.vertices.emplace_back(radius * std::cos(a), -h2, radius * std::sin(a));
    m.vertices.emplace_back(radius * std::cos(a), h2, radius * std::sin(a));
  }
  const int bot_c = static_cast<int>(m.vertices.size());
  m.vertices.emplace_back(0, -h2, 0);
  const int top_c = bot_c + 1;
  m.vertices.emplace_back(0, h2, 0);
  for (int i = 0; i < segments; ++i) {
    const int b0 = 2 * i, t0 = 2 * i + 1;
    const int b1 = 2 * ((i + 1) % segments), t1 = b1 + 1;
    m.faces.push_back({b0, t0, t1});
    m.faces.push_back({b0, t1, b1});
    m.faces.push_back({bot_c, b0, b1});
    m.faces.push_back({top_c, t1, t0});
  }
  require_watertight(m);
  return m;
}

TriangleMesh make_capsule(double radius, double height, int stacks, int slices) {
  if (radius <= 0.0 || height < 0.0) throw GeometryError("make_capsule: bad dimensions");
  if (stacks < 2 || slices < 3) throw GeometryError("make_capsule: bad tessellation");
  if (stacks % 2 != 0) ++stacks;  // need an equator to split at
  // UV sphere with the two hemispheres displaced by +/- height/2 along y.
  TriangleMesh m;
  const double h2 = height / 2.0;
  m.vertices.emplace_back(0, radius + h2, 0);  // north pole
  for (int s = 1; s < stacks; ++s) {
    const double phi = M_PI * s / stacks;  // 0 at north
    const double y = radius * std::cos(phi);
    const double r = radius * std::sin(phi);
    const double off = (s <= stacks / 2) ? h2 : -h2;
    for (int j = 0; j < slices; ++j) {
      const double th = 2.0 * M_PI * j / slices;
      m.vertices.emplace_back(r * std::cos(th), y + off, r * std::sin(th));
    }
    if (s == stacks / 2) {  // duplicate ring at the other offset for the side wall
      for (int j = 0; j < slices; ++j) {
        const double th = 2.0 * M_PI * j / slices;
        m.vertices.emplace_back(r * std::cos(th), y - h2, r * std::sin(th));
      }
    }
  }
  const int south = static_cast<int>(m.vertices.size());
  m.vertices.emplace_back(0, -radius - h2, 0);

  // Ring start indices: rings 1..stacks-1 plus the duplicated equator ring.
  auto ring_start = [&](int ring) {
    // ring in [1, stacks]: rings above equator keep index, the duplicate
    // equator ring is inserted after ring stacks/2.
    if (ring <= stacks / 2) return 1 + (ring - 1) * slices;
    return 1 + ring * slices;  // shifted by the duplicate
  };
  const int equator_hi = ring_start(stacks / 2);
  const int equator_lo = equator_hi + slices;

  // North cap.
  for (int j = 0; j < slices; ++j) {
    const int a = ring_start(1) + j, b = ring_start(1) + (j + 1) % slices;
    m.faces.push_back({0, b, a});
  }
  // Upper hemisphere bands.
  for (int s = 1; s < stacks / 2; ++s)
    for (int j = 0; j < slices; ++j) {
      const int a = ring_start(s) + j, b = ring_start(s) + (j + 1) % slices;
      const int c = ring_start(s + 1) + j, d = ring_start(s + 1) + (j + 1) % slices;
      m.faces.push_back({a, b, d});
      m.faces.push_back({a, d, c});
    }
  // Side wall between duplicated equator rings.
  for (int j = 0; j < slices; ++j) {
    const int a = equator_hi + j, b = equator_hi + (j + 1) % slices;
    const int c = equator_lo + j, d = equator_lo + (j + 1) % slices;
    m.faces.push_back({a, b, d});
    m.faces.push_back({a, d, c});
  }
  // Lower hemisphere bands (ring stacks/2 duplicate -> stacks-1).
  for (int s = stacks / 2; s < stacks - 1; ++s)
    for (int j = 0; j < slices; ++j) {
      const int as = (s == stacks / 2) ? equator_lo : ring_start(s);
      const int a = as + j, b = as + (j + 1) % slices;
      const int c = ring_start(s + 1) + j, d = ring_start(s + 1) + (j + 1) % slices;
      m.faces.push_back({a, b, d});
      m.faces.push_back({a, d, c});
    }
  // South cap.
  for (int j = 0; j < slices; ++j) {
    const int a = ring_start(stacks - 1) + j, b = ring_start(stacks - 1) + (j + 1) % slices;
    m.faces.push_back({south, a, b});
  }
  require_watertight(m);
  return m;
}

TriangleMesh make_lshape(double size) {
  if (size <= 0.0) throw GeometryError("make_lshape: size must be positive");
  // Union of two boxes sharing a face: an L-bracket. Built as an extruded
  // hexagonal profile so the mesh is watertight without coplanar seams.
  const double s = size, t = size / 2.0;
  // Profile in xy (CCW), extruded along z by t.
  const Vec3 profile[6] = {{0, 0, 0}, {s, 0, 0}, {s, t, 0}, {t, t, 0}, {t, s, 0}, {0, s, 0}};
  TriangleMesh m;
  for (int k = 0; k < 2; ++k)
    for (const auto& p : profile) m.vertices.emplace_back(p.x(), p.y(), k == 0 ? 0.0 : t);
  // Bottom (z=0, normal -z: clockwise in xy) and top (CCW), fan from vertex 0.
  const int fan[4][3] = {{0, 1, 2}, {0, 2, 3}, {0, 3, 4}, {0, 4, 5}};
  for (const auto& f : fan) {
    m.faces.push_back({f[0], f[2], f[1]});
    m.faces.push_back({6 + f[0], 6 + f[1], 6 + f[2]});
  }
  for (int i = 0; i < 6; ++i) {
    const int j = (i + 1) % 6;
    m.faces.push_back({i, j, 6 + j});
    m.faces.push_back({i, 6 + j, 6 + i});
  }
  require_watertight(m);
  return m;
}

const char* object_kind_name(ObjectKind k) {
  switch (k) {
    case ObjectKind::kBox: return "box";
    case ObjectKind::kSphere: return "sphere";
    case ObjectKind::kTorus: return "torus";
    case ObjectKind::kCylinder: return "cylinder";
    case ObjectKind::kCapsule: return "capsule";
  }
  throw GeometryError("object_kind_name: bad kind");
}

ObjectKind parse_object_kind(const std::string& name) {
  for (ObjectKind k : {ObjectKind::kBox, ObjectKind::kSphere, ObjectKind::kTorus,
                       ObjectKind::kCylinder, ObjectKind::kCapsule})
    if (name == object_kind_name(k)) return k;
  throw ConfigError("unknown object kind: " + name);
}

TriangleMesh sample_object(Rng& rng, ObjectKind kind, double scale) {
  if (scale <= 0.0) throw GeometryError("sample_object: scale must be positive");
  switch (kind) {
    case ObjectKind::kBox: {
      const Vec3 he(scale * rng.uniform(0.5, 1.0), scale * rng.uniform(0.5, 1.0),
                    scale * rng.uniform(0.5, 1.0));
      return make_box(he);
    }
    case ObjectKind::kSphere:
      return make_icosphere(scale * rng.uniform(0.6, 1.0), 3);
    case ObjectKind::kTorus: {
      const double R = scale * rng.uniform(0.6, 0.9);
      return make_torus(R, R * rng.uniform(0.25, 0.45), 32, 20);
    }
    case ObjectKind::kCylinder:
      return make_cylinder(scale * rng.uniform(0.4, 0.7), scale * rng.uniform(1.0, 1.8), 32);
    case ObjectKind::kCapsule:
      return make_capsule(scale * rng.uniform(0.35, 0.6), scale * rng.uniform(0.6, 1.4), 16, 24);
  }
  throw GeometryError("sample_object: bad kind");
}

// --- human figure ---

namespace {

double sd_capsule(const Vec3& p, const Vec3& a, const Vec3& b, double r) {
  const Vec3 pa = p - a, ba = b - a;
  const double bb = ba.squaredNorm();
  const double h = bb > 0.0 ? std::clamp(pa.dot(ba) / bb, 0.0, 1.0) : 0.0;
  return (pa - ba * h).norm() - r;
}

double smin(double a, double b, double k) {
  const double h = std::clamp(0.5 + 0.5 * (b - a) / k, 0.0, 1.0);
  return b + (a - b) * h - k * h * (1.0 - h);
}

struct Segment {
  Vec3 a, b;
  double r;
};

// Forward kinematics for the capsule skeleton.
std::vector<Segment> figure_segments(const HumanParams& p) {
  std::vector<Segment> segs;
  const double B = p.bulk;
  const double lean = p.torso_lean;
  const Vec3 up(std::sin(lean), std::cos(lean), 0.0);

  const Vec3 pelvis(0, 0, 0);
  const Vec3 chest = pelvis + 0.42 * up;
  const Vec3 neck_base = pelvis + 0.52 * up;
  const Vec3 head_c = pelvis + 0.65 * up;

  segs.push_back({pelvis + Vec3(0, 0.05, 0), chest, 0.13 * B});      // torso
  segs.push_back({chest - 0.06 * up, chest, 0.145 * B});             // chest bulk
  segs.push_back({neck_base - 0.04 * up, neck_base, 0.045 * B});     // neck
  segs.push_back({head_c, head_c + 0.02 * up, 0.095 * B});           // head
  segs.push_back({Vec3(-0.08, 0, 0), Vec3(0.08, 0, 0), 0.10 * B});   // hips
  segs.push_back({chest + Vec3(-0.14, 0.03, 0), chest + Vec3(0.14, 0.03, 0), 0.055 * B});

  for (int side = 0; side < 2; ++side) {
    const double sgn = side == 0 ? -1.0 : 1.0;
    // Arm: shoulder -> elbow -> wrist.
    const Vec3 shoulder = chest + Vec3(sgn * 0.17, 0.04, 0);
    const double ab = p.shoulder_abduct[side];
    const double sw = p.shoulder_swing[side];
    Vec3 arm_dir(sgn * std::sin(ab), -std::cos(ab), 0.0);
    // Swing rotates the arm about the x axis (forward/back).
    arm_dir = Eigen::AngleAxisd(sw, Vec3::UnitX()) * arm_dir;
    const double upper_len = 0.26, fore_len = 0.24;
    const Vec3 elbow = shoulder + upper_len * arm_dir;
    // Elbow bend folds the forearm toward the chest plane.
    const Vec3 bend_axis = arm_dir.cross(Vec3::UnitZ()).normalized();
    const Vec3 fore_dir = Eigen::AngleAxisd(sgn * p.elbow_bend[side], bend_axis) * arm_dir;
    const Vec3 wrist = elbow + fore_len * fore_dir;
    segs.push_back({shoulder, elbow, 0.048 * B});
    segs.push_back({elbow, wrist, 0.04 * B});
    segs.push_back({wrist, wrist + 0.07 * fore_dir, 0.035 * B});  // hand

    // Leg: hip -> knee -> ankle.
    const Vec3 hip(sgn * 0.09, -0.02, 0);
    const double spread = p.leg_spread[side];
    const Vec3 leg_dir(sgn * std::sin(spread), -std::cos(spread), 0.0);
    const double thigh_len = 0.40, shin_len = 0.38;
    const Vec3 knee = hip + thigh_len * leg_dir;
    const Vec3 shin_dir =
        Eigen::AngleAxisd(-p.knee_bend[side], Vec3::UnitX()) * leg_dir;
    const Vec3 ankle = knee + shin_len * shin_dir;
    segs.push_back({hip, knee, 0.07 * B});
    segs.push_back({knee, ankle, 0.05 * B});
    segs.push_back({ankle, ankle + Vec3(0, -0.02, 0.10), 0.042 * B});  // foot
  }
  return segs;
}

double figure_sdf(const std::vector<Segment>& segs, const Vec3& x, double blend) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& s : segs) d = std::isinf(d) ? sd_capsule(x, s.a, s.b, s.r)
                                               : smin(d, sd_capsule(x, s.a, s.b, s.r), blend);
  return d;
}

geom::Bbox figure_bounds(const std::vector<Segment>& segs) {
  geom::Bbox box;
  for (const auto& s : segs) {
    box.extend(s.a + Vec3::Constant(s.r));
    box.extend(s.a - Vec3::Constant(s.r));
    box.extend(s.b + Vec3::Constant(s.r));
    box.extend(s.b - Vec3::Constant(s.r));
  }
  return box;
}

TriangleMesh extract_figure(const HumanParams& p, int resolution, double blend) {
  const auto segs = figure_segments(p);
  auto grid = surface::ScalarGrid::covering(figure_bounds(segs), resolution, 0.08);
  // Occupancy convention: inside must be > iso, so negate the SDF.
  grid.fill([&](const Vec3& x) { return static_cast<float>(-figure_sdf(segs, x, blend)); });
  return surface::marching_cubes(grid, 0.0f, /*require_closed=*/true);
}

}  // namespace

HumanParams HumanParams::sample(Rng& rng) {
  HumanParams p;
  for (int s = 0; s < 2; ++s) {
    p.shoulder_abduct[s] = rng.uniform(0.25, 1.1);
    p.shoulder_swing[s] = rng.uniform(-0.5, 0.5);
    p.elbow_bend[s] = rng.uniform(0.1, 1.2);
    p.leg_spread[s] = rng.uniform(0.03, 0.22);
    p.knee_bend[s] = rng.uniform(0.0, 0.35);
  }
  p.torso_lean = rng.uniform(-0.12, 0.12);
  p.bulk = rng.uniform(0.9, 1.1);
  return p;
}

double human_sdf(const HumanParams& p, const Vec3& x) {
  return figure_sdf(figure_segments(p), x, 0.04);
}

TriangleMesh make_human(const HumanParams& p, int resolution) {
  if (resolution < 16) throw GeometryError("make_human: resolution too low");
  return extract_figure(p, resolution, 0.04);
}

TriangleMesh make_body_proxy(const HumanParams& p, int resolution) {
  if (resolution < 16) throw GeometryError("make_body_proxy: resolution too low");
  return extract_figure(p, std::max(16, resolution / 2), 0.09);
}

}  // namespace hoir::scene
