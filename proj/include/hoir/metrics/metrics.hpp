#pragma once

#include "hoir/geom/queries.hpp"

namespace hoir::metrics {

using geom::TriangleMesh;
using geom::Vec3;

struct MetricConfig {
  int n_samples = 10000;      // surface samples per mesh per direction
  double tau_fraction = 0.01; // f-score threshold as a fraction of the
                              // ground-truth bounding-box diagonal
  int iou_resolution = 64;    // parity-voxel cells along the longest axis
  bool p2s_pred_to_gt = true; // one-sided distance direction
  uint64_t seed = 0;
};

// All distances are in mesh units (meters); fscore is a percentage.
struct MetricReport {
  double p2s = 0.0;
  double cd = 0.0;
  double iou = 0.0;
  double normal = 0.0;
  double fscore = 0.0;
  int n_samples = 0;
  double tau = 0.0;  // absolute threshold the f-score used
};

// Similarity alignment for reconstructions: uniform scale from the human
// bounding-box diagonals (ground truth over prediction), then translation
// matching the human vertex centroids. Applied to every predicted part.
struct Alignment {
  double scale = 1.0;
  Vec3 pred_center = Vec3::Zero();
  Vec3 gt_center = Vec3::Zero();
};
Alignment compute_alignment(const TriangleMesh& pred_human, const TriangleMesh& gt_human);
void apply_alignment(TriangleMesh& mesh, const Alignment& a);

// Individual metrics. Every sampler is seeded, so repeated calls agree
// bit for bit. Empty meshes throw GeometryError.
double point_to_surface(const TriangleMesh& from, const TriangleMesh& to, int n_samples,
                        uint64_t seed);
double chamfer(const TriangleMesh& a, const TriangleMesh& b, int n_samples, uint64_t seed);
// Parity-voxel IoU of two closed solids on a shared cell-center grid.
double voxel_iou(const TriangleMesh& a, const TriangleMesh& b, int resolution, uint64_t seed);
// Union-of-parts variant: a point is inside a side when any of its parts
// contains it. Required when closed parts touch or overlap, where a merged
// soup would break ray parity.
double voxel_iou_parts(const std::vector<const TriangleMesh*>& a,
                       const std::vector<const TriangleMesh*>& b, int resolution, uint64_t seed);
double normal_consistency(const TriangleMesh& a, const TriangleMesh& b, int n_samples,
                          uint64_t seed);
double f_score(const TriangleMesh& pred, const TriangleMesh& gt, double tau, int n_samples,
               uint64_t seed);

// Metrics on one mesh pair as-is (no alignment); IoU treats each side as a
// single closed solid.
MetricReport evaluate_meshes(const TriangleMesh& pred, const TriangleMesh& gt,
                             const MetricConfig& cfg);

// Reconstruction scoring: aligns the prediction via the human pair, merges
// the entities for the surface metrics, and takes the per-entity union for
// IoU.
MetricReport evaluate_reconstruction(const TriangleMesh& pred_human,
                                     const TriangleMesh& pred_object,
                                     const TriangleMesh& gt_human, const TriangleMesh& gt_object,
                                     const MetricConfig& cfg);

// Same scoring for pre-merged joint meshes (the mesh-file interface): the
// human parts drive alignment, and IoU splits each joint soup into connected
// components so touching closed parts keep ray parity intact.
MetricReport evaluate_joint_pair(const TriangleMesh& pred_joint, const TriangleMesh& pred_human,
                                 const TriangleMesh& gt_joint, const TriangleMesh& gt_human,
                                 const MetricConfig& cfg);

}  // namespace hoir::metrics
