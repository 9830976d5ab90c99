#include "hoir/metrics/metrics.hpp"

#include <algorithm>
#include <memory>

#include "hoir/geom/bvh.hpp"

namespace hoir::metrics {

using geom::Bbox;
using geom::Bvh;
using hoir::GeometryError;
using geom::SurfaceSampler;

namespace {

void require_nonempty(const TriangleMesh& m, const char* what) {
  if (m.empty()) throw GeometryError(std::string(what) + ": empty mesh");
}

// Deterministic regardless of thread count: sample sequentially, query in
// parallel into per-point slots, reduce sequentially.
std::vector<double> closest_distances(const std::vector<Vec3>& pts, const Bvh& bvh) {
  std::vector<double> d(pts.size());
  parallel_for(pts.size(), [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) d[i] = bvh.closest_point(pts[i]).dist;
  });
  return d;
}

double mean(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

struct VoxelGrid {
  Vec3 lo = Vec3::Zero();
  Vec3 spacing = Vec3::Ones();
  Eigen::Vector3i dims = Eigen::Vector3i::Ones();
  size_t count() const {
    return static_cast<size_t>(dims.x()) * dims.y() * dims.z();
  }
  Vec3 center(size_t linear) const {
    const int x = static_cast<int>(linear % dims.x());
    const int y = static_cast<int>((linear / dims.x()) % dims.y());
    const int z = static_cast<int>(linear / (static_cast<size_t>(dims.x()) * dims.y()));
    return lo + Vec3((x + 0.5) * spacing.x(), (y + 0.5) * spacing.y(), (z + 0.5) * spacing.z());
  }
};

VoxelGrid cell_grid(const Bbox& box, int resolution) {
  if (resolution < 1) throw GeometryError("voxel_iou: resolution must be positive");
  VoxelGrid g;
  g.lo = box.min();
  const Vec3 extent = box.diagonal();
  const double longest = extent.maxCoeff();
  if (longest <= 0.0) throw GeometryError("voxel_iou: degenerate bounding box");
  for (int d = 0; d < 3; ++d) {
    g.dims[d] = std::max(1, static_cast<int>(std::lround(resolution * extent[d] / longest)));
    g.spacing[d] = extent[d] / g.dims[d];
  }
  return g;
}

double iou_over_parts(const std::vector<const TriangleMesh*>& a,
                      const std::vector<const TriangleMesh*>& b, int resolution, uint64_t seed) {
  std::vector<std::unique_ptr<Bvh>> ba, bb;
  Bbox box;
  for (const auto* m : a)
    if (m && !m->empty()) {
      ba.push_back(std::make_unique<Bvh>(*m));
      box.extend(m->bounds());
    }
  for (const auto* m : b)
    if (m && !m->empty()) {
      bb.push_back(std::make_unique<Bvh>(*m));
      box.extend(m->bounds());
    }
  if (ba.empty() && bb.empty()) throw GeometryError("voxel_iou: both sides empty");
  if (ba.empty() || bb.empty()) return 0.0;

  const VoxelGrid grid = cell_grid(box, resolution);
  std::vector<uint8_t> flags(grid.count(), 0);  // bit0 = in A, bit1 = in B
  parallel_for(grid.count(), [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      const Vec3 x = grid.center(i);
      const uint64_t s = derive_seed(seed, i);
      uint8_t f = 0;
      for (const auto& bvh : ba)
        if (geom::occupancy(*bvh, x, s)) {
          f |= 1;
          break;
        }
      for (const auto& bvh : bb)
        if (geom::occupancy(*bvh, x, s)) {
          f |= 2;
          break;
        }
      flags[i] = f;
    }
  });
  size_t inter = 0, uni = 0;
  for (uint8_t f : flags) {
    if (f == 3) ++inter;
    if (f != 0) ++uni;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

Alignment compute_alignment(const TriangleMesh& pred_human, const TriangleMesh& gt_human) {
  require_nonempty(pred_human, "alignment (prediction)");
  require_nonempty(gt_human, "alignment (ground truth)");
  const double dp = pred_human.bounds().diagonal().norm();
  const double dg = gt_human.bounds().diagonal().norm();
  if (dp <= 0.0) throw GeometryError("alignment: degenerate predicted human bounds");
  Alignment a;
  a.scale = dg / dp;
  a.pred_center = pred_human.vertex_centroid();
  a.gt_center = gt_human.vertex_centroid();
  return a;
}

void apply_alignment(TriangleMesh& mesh, const Alignment& a) {
  for (auto& v : mesh.vertices) v = a.scale * (v - a.pred_center) + a.gt_center;
}

double point_to_surface(const TriangleMesh& from, const TriangleMesh& to, int n_samples,
                        uint64_t seed) {
  require_nonempty(from, "point_to_surface (source)");
  require_nonempty(to, "point_to_surface (target)");
  SurfaceSampler sampler(from);
  Rng rng(seed);
  const std::vector<Vec3> pts = sampler.sample_n(rng, static_cast<size_t>(n_samples));
  const Bvh bvh(to);
  return mean(closest_distances(pts, bvh));
}

double chamfer(const TriangleMesh& a, const TriangleMesh& b, int n_samples, uint64_t seed) {
  const double ab = point_to_surface(a, b, n_samples, derive_seed(seed, 1));
  const double ba = point_to_surface(b, a, n_samples, derive_seed(seed, 2));
  return 0.5 * (ab + ba);
}

double voxel_iou(const TriangleMesh& a, const TriangleMesh& b, int resolution, uint64_t seed) {
  return iou_over_parts({&a}, {&b}, resolution, seed);
}

double voxel_iou_parts(const std::vector<const TriangleMesh*>& a,
                       const std::vector<const TriangleMesh*>& b, int resolution, uint64_t seed) {
  return iou_over_parts(a, b, resolution, seed);
}

namespace {

double one_sided_normal(const TriangleMesh& from, const TriangleMesh& to, int n_samples,
                        uint64_t seed) {
  SurfaceSampler sampler(from);
  Rng rng(seed);
  std::vector<Vec3> pts(static_cast<size_t>(n_samples)), nrm(static_cast<size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) pts[i] = sampler.sample(rng, nrm[i]);
  const Bvh bvh(to);
  std::vector<double> cosines(pts.size());
  parallel_for(pts.size(), [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      const auto cp = bvh.closest_point(pts[i]);
      const Vec3 n_to = to.face_normal(static_cast<size_t>(cp.triangle));
      cosines[i] = std::max(0.0, nrm[i].dot(n_to));
    }
  });
  return mean(cosines);
}

}  // namespace

double normal_consistency(const TriangleMesh& a, const TriangleMesh& b, int n_samples,
                          uint64_t seed) {
  require_nonempty(a, "normal_consistency");
  require_nonempty(b, "normal_consistency");
  return 0.5 * (one_sided_normal(a, b, n_samples, derive_seed(seed, 1)) +
                one_sided_normal(b, a, n_samples, derive_seed(seed, 2)));
}

double f_score(const TriangleMesh& pred, const TriangleMesh& gt, double tau, int n_samples,
               uint64_t seed) {
  require_nonempty(pred, "f_score (prediction)");
  require_nonempty(gt, "f_score (ground truth)");
  if (tau <= 0.0) throw GeometryError("f_score: tau must be positive");
  auto fraction_within = [&](const TriangleMesh& from, const TriangleMesh& to, uint64_t s) {
    SurfaceSampler sampler(from);
    Rng rng(s);
    const std::vector<Vec3> pts = sampler.sample_n(rng, static_cast<size_t>(n_samples));
    const Bvh bvh(to);
    const std::vector<double> d = closest_distances(pts, bvh);
    size_t within = 0;
    for (double x : d)
      if (x <= tau) ++within;
    return static_cast<double>(within) / static_cast<double>(d.size());
  };
  const double precision = fraction_within(pred, gt, derive_seed(seed, 1));
  const double recall = fraction_within(gt, pred, derive_seed(seed, 2));
  if (precision + recall <= 0.0) return 0.0;
  return 100.0 * 2.0 * precision * recall / (precision + recall);
}

MetricReport evaluate_meshes(const TriangleMesh& pred, const TriangleMesh& gt,
                             const MetricConfig& cfg) {
  require_nonempty(pred, "evaluate_meshes (prediction)");
  require_nonempty(gt, "evaluate_meshes (ground truth)");
  MetricReport r;
  r.n_samples = cfg.n_samples;
  r.tau = cfg.tau_fraction * gt.bounds().diagonal().norm();
  r.p2s = cfg.p2s_pred_to_gt
              ? point_to_surface(pred, gt, cfg.n_samples, derive_seed(cfg.seed, 10))
              : point_to_surface(gt, pred, cfg.n_samples, derive_seed(cfg.seed, 10));
  r.cd = chamfer(pred, gt, cfg.n_samples, derive_seed(cfg.seed, 20));
  r.iou = voxel_iou(pred, gt, cfg.iou_resolution, derive_seed(cfg.seed, 30));
  r.normal = normal_consistency(pred, gt, cfg.n_samples, derive_seed(cfg.seed, 40));
  r.fscore = f_score(pred, gt, r.tau, cfg.n_samples, derive_seed(cfg.seed, 50));
  return r;
}

MetricReport evaluate_reconstruction(const TriangleMesh& pred_human,
                                     const TriangleMesh& pred_object,
                                     const TriangleMesh& gt_human, const TriangleMesh& gt_object,
                                     const MetricConfig& cfg) {
  require_nonempty(gt_human, "evaluate_reconstruction (gt human)");
  require_nonempty(gt_object, "evaluate_reconstruction (gt object)");
  const TriangleMesh gt = geom::merge({gt_human, gt_object});
  const double gt_diag = gt.bounds().diagonal().norm();

  // Align the prediction about its human part; a missing or degenerate
  // predicted human leaves the prediction where it is.
  TriangleMesh ph = pred_human, po = pred_object;
  if (!ph.empty() && ph.bounds().diagonal().norm() > 0.0) {
    const Alignment a = compute_alignment(ph, gt_human);
    apply_alignment(ph, a);
    apply_alignment(po, a);
  }

  MetricReport r;
  r.n_samples = cfg.n_samples;
  r.tau = cfg.tau_fraction * gt_diag;
  if (ph.empty() && po.empty()) {
    // Nothing was reconstructed. Report the honest worst case instead of
    // failing the whole evaluation run.
    r.p2s = gt_diag;
    r.cd = gt_diag;
    r.iou = 0.0;
    r.normal = 0.0;
    r.fscore = 0.0;
    return r;
  }
  const TriangleMesh pred = geom::merge({ph, po});
  r.p2s = cfg.p2s_pred_to_gt
              ? point_to_surface(pred, gt, cfg.n_samples, derive_seed(cfg.seed, 10))
              : point_to_surface(gt, pred, cfg.n_samples, derive_seed(cfg.seed, 10));
  r.cd = chamfer(pred, gt, cfg.n_samples, derive_seed(cfg.seed, 20));
  r.iou = voxel_iou_parts({&ph, &po}, {&gt_human, &gt_object}, cfg.iou_resolution,
                          derive_seed(cfg.seed, 30));
  r.normal = normal_consistency(pred, gt, cfg.n_samples, derive_seed(cfg.seed, 40));
  r.fscore = f_score(pred, gt, r.tau, cfg.n_samples, derive_seed(cfg.seed, 50));
  return r;
}

MetricReport evaluate_joint_pair(const TriangleMesh& pred_joint, const TriangleMesh& pred_human,
                                 const TriangleMesh& gt_joint, const TriangleMesh& gt_human,
                                 const MetricConfig& cfg) {
  require_nonempty(gt_joint, "evaluate_joint_pair (gt)");
  require_nonempty(gt_human, "evaluate_joint_pair (gt human)");
  const double gt_diag = gt_joint.bounds().diagonal().norm();

  TriangleMesh pred = pred_joint;
  if (!pred_human.empty() && pred_human.bounds().diagonal().norm() > 0.0) {
    const Alignment a = compute_alignment(pred_human, gt_human);
    apply_alignment(pred, a);
  }

  MetricReport r;
  r.n_samples = cfg.n_samples;
  r.tau = cfg.tau_fraction * gt_diag;
  if (pred.empty()) {
    r.p2s = gt_diag;
    r.cd = gt_diag;
    return r;
  }

  r.p2s = cfg.p2s_pred_to_gt
              ? point_to_surface(pred, gt_joint, cfg.n_samples, derive_seed(cfg.seed, 10))
              : point_to_surface(gt_joint, pred, cfg.n_samples, derive_seed(cfg.seed, 10));
  r.cd = chamfer(pred, gt_joint, cfg.n_samples, derive_seed(cfg.seed, 20));

  const std::vector<TriangleMesh> pa = geom::connected_components(pred);
  const std::vector<TriangleMesh> pb = geom::connected_components(gt_joint);
  std::vector<const TriangleMesh*> va, vb;
  for (const auto& m : pa) va.push_back(&m);
  for (const auto& m : pb) vb.push_back(&m);
  r.iou = iou_over_parts(va, vb, cfg.iou_resolution, derive_seed(cfg.seed, 30));

  r.normal = normal_consistency(pred, gt_joint, cfg.n_samples, derive_seed(cfg.seed, 40));
  r.fscore = f_score(pred, gt_joint, r.tau, cfg.n_samples, derive_seed(cfg.seed, 50));
  return r;
}

}  // namespace hoir::metrics
