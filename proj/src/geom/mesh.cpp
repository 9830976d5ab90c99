#include "hoir/geom/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>

namespace hoir::geom {

void TriangleMesh::validate() const {
  const int n = static_cast<int>(vertices.size());
  for (size_t f = 0; f < faces.size(); ++f) {
    const auto& face = faces[f];
    for (int k = 0; k < 3; ++k) {
      if (face[k] < 0 || face[k] >= n)
        throw GeometryError("mesh face " + std::to_string(f) + " references vertex " +
                            std::to_string(face[k]) + " out of range [0," + std::to_string(n) + ")");
    }
    if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2])
      throw GeometryError("mesh face " + std::to_string(f) + " has repeated indices");
  }
  if (!vertex_normals.empty() && vertex_normals.size() != vertices.size())
    throw GeometryError("vertex_normals count does not match vertex count");
}

Bbox TriangleMesh::bounds() const {
  Bbox b;
  for (const auto& v : vertices) b.extend(v);
  return b;
}

Vec3 TriangleMesh::vertex_centroid() const {
  if (vertices.empty()) throw GeometryError("vertex_centroid of empty mesh");
  Vec3 c = Vec3::Zero();
  for (const auto& v : vertices) c += v;
  return c / static_cast<double>(vertices.size());
}

double TriangleMesh::face_area(size_t f) const {
  const auto& fc = faces[f];
  return 0.5 * (vertices[fc[1]] - vertices[fc[0]]).cross(vertices[fc[2]] - vertices[fc[0]]).norm();
}

Vec3 TriangleMesh::face_normal(size_t f) const {
  const auto& fc = faces[f];
  Vec3 n = (vertices[fc[1]] - vertices[fc[0]]).cross(vertices[fc[2]] - vertices[fc[0]]);
  double len = n.norm();
  return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
}

double TriangleMesh::surface_area() const {
  double a = 0.0;
  for (size_t f = 0; f < faces.size(); ++f) a += face_area(f);
  return a;
}

void TriangleMesh::transform(const Rigid& t) {
  for (auto& v : vertices) v = t * v;
  const Mat3 r = t.rotation();
  for (auto& n : vertex_normals) n = r * n;
}

void TriangleMesh::translate(const Vec3& t) {
  for (auto& v : vertices) v += t;
}

bool is_watertight(const TriangleMesh& mesh) {
  if (mesh.faces.empty()) return false;
  // Directed edge map: closed orientable surface has every undirected edge
  // appearing exactly once in each direction.
  std::map<std::pair<int, int>, int> directed;
  for (const auto& f : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      int a = f[k], b = f[(k + 1) % 3];
      if (++directed[{a, b}] > 1) return false;
    }
  }
  for (const auto& [edge, count] : directed) {
    auto rev = directed.find({edge.second, edge.first});
    if (rev == directed.end() || rev->second != 1) return false;
  }
  return true;
}

void require_watertight(TriangleMesh& mesh) {
  mesh.validate();
  if (!is_watertight(mesh))
    throw GeometryError("mesh is not watertight (" + std::to_string(mesh.face_count()) + " faces)");
  mesh.watertight = true;
}

double signed_volume(const TriangleMesh& mesh) {
  double vol = 0.0;
  for (const auto& f : mesh.faces) {
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    vol += a.dot(b.cross(c));
  }
  return vol / 6.0;
}

std::vector<TriangleMesh> connected_components(const TriangleMesh& mesh) {
  const size_t nv = mesh.vertices.size();
  std::vector<int> parent(nv);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& f : mesh.faces) {
    int a = find(f[0]);
    parent[find(f[1])] = a;
    parent[find(f[2])] = a;
  }
  std::map<int, int> root_to_comp;
  std::vector<std::vector<std::array<int, 3>>> comp_faces;
  for (const auto& f : mesh.faces) {
    int root = find(f[0]);
    auto it = root_to_comp.find(root);
    if (it == root_to_comp.end()) {
      it = root_to_comp.emplace(root, static_cast<int>(comp_faces.size())).first;
      comp_faces.emplace_back();
    }
    comp_faces[it->second].push_back(f);
  }
  std::vector<TriangleMesh> out;
  out.reserve(comp_faces.size());
  for (const auto& faces : comp_faces) {
    TriangleMesh m;
    std::vector<int> remap(nv, -1);
    for (auto f : faces) {
      for (int k = 0; k < 3; ++k) {
        int v = f[k];
        if (remap[v] < 0) {
          remap[v] = static_cast<int>(m.vertices.size());
          m.vertices.push_back(mesh.vertices[v]);
        }
        f[k] = remap[v];
      }
      m.faces.push_back(f);
    }
    m.watertight = is_watertight(m);
    out.push_back(std::move(m));
  }
  return out;
}

TriangleMesh merge(const std::vector<TriangleMesh>& parts) {
  TriangleMesh out;
  out.watertight = !parts.empty();
  for (const auto& p : parts) {
    const int base = static_cast<int>(out.vertices.size());
    out.vertices.insert(out.vertices.end(), p.vertices.begin(), p.vertices.end());
    for (const auto& f : p.faces) out.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
    out.watertight = out.watertight && p.watertight;
  }
  return out;
}

TriangleMesh read_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open OBJ file: " + path);
  TriangleMesh mesh;
  std::string line;
  while (std::getline(in, line)) {
    if (line.size() < 2) continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Vec3 v;
      ss >> v.x() >> v.y() >> v.z();
      if (ss.fail()) throw IoError("malformed vertex line in " + path + ": " + line);
      mesh.vertices.push_back(v);
    } else if (tag == "vn") {
      Vec3 n;
      ss >> n.x() >> n.y() >> n.z();
      if (ss.fail()) throw IoError("malformed normal line in " + path + ": " + line);
      mesh.vertex_normals.push_back(n);
    } else if (tag == "f") {
      std::array<int, 3> face{};
      std::string tok;
      int k = 0;
      while (ss >> tok) {
        if (k >= 3) throw IoError("non-triangle face in " + path + ": " + line);
        // accept "i", "i/j", "i//k", "i/j/k"; only the vertex index is used
        int idx = 0;
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), idx);
        if (res.ec != std::errc() || idx == 0)
          throw IoError("malformed face index in " + path + ": " + line);
        face[k++] = idx > 0 ? idx - 1 : static_cast<int>(mesh.vertices.size()) + idx;
      }
      if (k != 3) throw IoError("non-triangle face in " + path + ": " + line);
      mesh.faces.push_back(face);
    }
  }
  if (!mesh.vertex_normals.empty() && mesh.vertex_normals.size() != mesh.vertices.size())
    mesh.vertex_normals.clear();
  mesh.validate();
  // OBJ carries no manifoldness metadata; stamp the flag so inside/outside
  // queries work on loaded meshes exactly as on constructed ones.
  mesh.watertight = !mesh.faces.empty() && is_watertight(mesh);
  return mesh;
}

void write_obj(const std::string& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write OBJ file: " + path);
  char buf[160];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    out << buf;
  }
  for (const auto& n : mesh.vertex_normals) {
    std::snprintf(buf, sizeof(buf), "vn %.9g %.9g %.9g\n", n.x(), n.y(), n.z());
    out << buf;
  }
  const bool with_normals = mesh.vertex_normals.size() == mesh.vertices.size();
  for (const auto& f : mesh.faces) {
    if (with_normals)
      out << "f " << f[0] + 1 << "//" << f[0] + 1 << ' ' << f[1] + 1 << "//" << f[1] + 1 << ' '
          << f[2] + 1 << "//" << f[2] + 1 << '\n';
    else
      out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
  if (!out) throw IoError("failed writing OBJ file: " + path);
}

SurfaceSampler::SurfaceSampler(const TriangleMesh& mesh) : mesh_(mesh) {
  mesh.validate();
  if (mesh.faces.empty()) throw GeometryError("SurfaceSampler: empty mesh");
  cumulative_.resize(mesh.faces.size());
  double acc = 0.0;
  for (size_t f = 0; f < mesh.faces.size(); ++f) {
    acc += mesh.face_area(f);
    cumulative_[f] = acc;
  }
  if (acc <= 0.0) throw GeometryError("SurfaceSampler: zero total area");
}

Vec3 SurfaceSampler::sample(Rng& rng) const {
  Vec3 n;
  return sample(rng, n);
}

Vec3 SurfaceSampler::sample(Rng& rng, Vec3& normal) const {
  const double u = rng.uniform() * cumulative_.back();
  const size_t f = std::lower_bound(cumulative_.begin(), cumulative_.end(), u) -
                   cumulative_.begin();
  const auto& tri = mesh_.faces[std::min(f, mesh_.faces.size() - 1)];
  // Uniform barycentric draw via square-root trick.
  const double r1 = std::sqrt(rng.uniform()), r2 = rng.uniform();
  const double a = 1.0 - r1, b = r1 * (1.0 - r2), c = r1 * r2;
  normal = mesh_.face_normal(std::min(f, mesh_.faces.size() - 1));
  return a * mesh_.vertices[tri[0]] + b * mesh_.vertices[tri[1]] + c * mesh_.vertices[tri[2]];
}

std::vector<Vec3> SurfaceSampler::sample_n(Rng& rng, size_t n) const {
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = sample(rng);
  return pts;
}

}  // namespace hoir::geom
