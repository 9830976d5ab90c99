#include "hoir/sampling/sampler.hpp"

#include <algorithm>
#include <numeric>

#include "hoir/geom/queries.hpp"
#include "hoir/prior/prior.hpp"

namespace hoir::sampling {

using geom::Bvh;
using hoir::GeometryError;

void SamplerConfig::validate() const {
  if (pool_size == 0) throw ConfigError("sampler: pool_size must be positive");
  if (subset_size == 0) throw ConfigError("sampler: subset_size must be positive");
  for (double s : sigmas)
    if (s <= 0.0) throw ConfigError("sampler: sigmas must be positive");
  if (uniform_fraction < 0.0 || uniform_fraction > 1.0)
    throw ConfigError("sampler: uniform_fraction must be in [0,1]");
  if (bbox_margin < 0.0) throw ConfigError("sampler: bbox_margin must be non-negative");
}

std::vector<Vec3> sample_surface_gaussian(const geom::TriangleMesh& mesh, size_t n, double sigma,
                                          Rng& rng) {
  const geom::SurfaceSampler surf(mesh);
  std::vector<Vec3> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const Vec3 base = surf.sample(rng);
    out.push_back(base + Vec3(sigma * rng.normal(), sigma * rng.normal(), sigma * rng.normal()));
  }
  return out;
}

std::vector<Vec3> sample_uniform_bbox(const geom::Bbox& box, size_t n, double margin, Rng& rng) {
  const geom::Vec3 pad = box.diagonal() * margin;
  const geom::Vec3 lo = box.min() - pad;
  const geom::Vec3 span = box.max() + pad - lo;
  std::vector<Vec3> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i)
    out.emplace_back(lo.x() + span.x() * rng.uniform(), lo.y() + span.y() * rng.uniform(),
                     lo.z() + span.z() * rng.uniform());
  return out;
}

namespace {

void sample_entity_pool(const geom::TriangleMesh& mesh, const geom::Bbox& scene_box,
                        const SamplerConfig& cfg, uint8_t entity_tag, Rng& rng,
                        LabeledPoints& out) {
  const size_t n_uniform = static_cast<size_t>(cfg.pool_size * cfg.uniform_fraction);
  const size_t n_surface = cfg.pool_size - n_uniform;

  // Equal shares per scale; the leftover points go to the earliest scales.
  const size_t share = n_surface / 3, rem = n_surface % 3;
  for (size_t s = 0; s < 3; ++s) {
    const size_t n = share + (s < rem ? 1 : 0);
    for (const Vec3& p : sample_surface_gaussian(mesh, n, cfg.sigmas[s], rng)) {
      out.points.push_back(p);
      out.entity.push_back(entity_tag);
    }
  }
  for (const Vec3& p : sample_uniform_bbox(scene_box, n_uniform, cfg.bbox_margin, rng)) {
    out.points.push_back(p);
    out.entity.push_back(entity_tag);
  }
}

}  // namespace

LabeledPoints sample_scene_points(const scene::Scene& scene, const SamplerConfig& cfg,
                                  uint64_t seed) {
  cfg.validate();
  LabeledPoints out;
  out.points.reserve(2 * cfg.pool_size);
  out.entity.reserve(2 * cfg.pool_size);

  const geom::Bbox box = scene.joint_bounds();
  Rng rng_h(derive_seed(seed, hash_seed("points.human")));
  Rng rng_o(derive_seed(seed, hash_seed("points.object")));
  sample_entity_pool(scene.human, box, cfg, 0, rng_h, out);
  sample_entity_pool(scene.object, box, cfg, 1, rng_o, out);

  const Bvh bvh_h(scene.human);
  const Bvh bvh_o(scene.object);
  const size_t n = out.points.size();
  out.occ_h.assign(n, 0);
  out.occ_o.assign(n, 0);
  const uint64_t label_seed = derive_seed(seed, hash_seed("labels"));
  parallel_for(n, [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      const uint64_t si = derive_seed(label_seed, i);
      out.occ_h[i] = geom::occupancy(bvh_h, out.points[i], si) ? 1 : 0;
      out.occ_o[i] = geom::occupancy(bvh_o, out.points[i], si) ? 1 : 0;
    }
  });
  return out;
}

std::vector<uint32_t> draw_subset(const LabeledPoints& pool, uint8_t entity, size_t subset_size,
                                  uint64_t seed) {
  std::vector<uint32_t> candidates;
  candidates.reserve(pool.size());
  for (size_t i = 0; i < pool.size(); ++i)
    if (pool.entity[i] == entity) candidates.push_back(static_cast<uint32_t>(i));
  if (candidates.empty()) throw GeometryError("draw_subset: empty entity pool");
  if (candidates.size() <= subset_size) return candidates;

  // Partial Fisher-Yates: first subset_size slots become the draw.
  Rng rng(derive_seed(seed, hash_seed("subset") ^ entity));
  for (size_t i = 0; i < subset_size; ++i) {
    const size_t j = i + rng.uniform_index(candidates.size() - i);
    std::swap(candidates[i], candidates[j]);
  }
  candidates.resize(subset_size);
  return candidates;
}

std::pair<PointBatch, PointBatch> make_training_batch(const scene::Scene& scene,
                                                      const LabeledPoints& pool,
                                                      const geom::PerspectiveCamera& cam,
                                                      uint32_t view_id, const SamplerConfig& cfg,
                                                      uint64_t seed) {
  const prior::AnchorFrame frame = prior::anchor_frame(scene.proxy, cam);
  const uint64_t view_seed = derive_seed(seed, derive_seed(hash_seed("batch"), view_id));

  auto build = [&](uint8_t entity) {
    PointBatch batch;
    batch.entity = entity;
    batch.view_id = view_id;
    const std::vector<uint32_t> idx = draw_subset(pool, entity, cfg.subset_size, view_seed);
    batch.positions.reserve(idx.size());
    batch.occ_h.reserve(idx.size());
    batch.occ_o.reserve(idx.size());
    for (uint32_t i : idx) {
      batch.positions.push_back(pool.points[i]);
      batch.occ_h.push_back(pool.occ_h[i]);
      batch.occ_o.push_back(pool.occ_o[i]);
    }
    prior::recenter(batch.positions, frame);
    return batch;
  };
  return {build(0), build(1)};
}

}  // namespace hoir::sampling
