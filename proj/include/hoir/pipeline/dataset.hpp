#pragma once

#include <array>
#include <string>

#include "hoir/pipeline/config.hpp"
#include "hoir/prior/prior.hpp"

namespace hoir::pipeline {

using geom::Vec3;

// One entity's labeled candidate pool plus its per-view pose-feature cache.
//
// On disk ("points_h.hopt" / "points_o.hopt"): little-endian header (magic
// "HOPT", u32 count, u8 entity), then float32 xyz triples, then one u8 label
// per point packing both occupancy bits (bit 0 = inside human, bit 1 =
// inside object). The pose-feature cache is appended after the labels as
// float32 (d, v, z) triples: for each view in index order, first the
// human-template triples, then the object-template triples, `count` each.
// The view count is implied by the remaining file length.
struct PointCache {
  uint8_t entity = 0;
  std::vector<Vec3> points;  // world frame
  std::vector<uint8_t> occ_h, occ_o;
  // sigma[view][t] = 3N floats (d,v,z per point); t 0 = human template,
  // t 1 = object template.
  std::vector<std::array<std::vector<float>, 2>> sigma;

  size_t size() const { return points.size(); }
};

void write_point_cache(const std::string& path, const PointCache& cache);
PointCache read_point_cache(const std::string& path);

struct LoadedView {
  scene::ViewBundle bundle;
  double azimuth = 0.0;
  Vec3 translation = Vec3::Zero();
};

// A scene directory pulled back into memory: meshes, views, point caches.
struct LoadedScene {
  std::string dir;
  uint64_t seed = 0;
  scene::Scene scene;  // meshes populated from disk; generator params are
                       // provenance only and stay default
  std::vector<LoadedView> views;
  PointCache cache_h, cache_o;

  // Both caches concatenated (human first) for subset drawing.
  sampling::LabeledPoints pool() const;
};

// Renders and writes one dataset under `out_dir`:
//   scenes/<id>/scene.json, meshes/{human,proxy,object}.obj,
//   views/<k>/{If,Ip,Ih,Io,Sn}.pfm + {Ms,Mp,Mo,Mi}.png + depth.pfm +
//   depth_prior.pfm, points_{h,o}.hopt.
// Returns the scene directories in index order.
std::vector<std::string> write_dataset(const std::string& out_dir, const ExperimentConfig& cfg,
                                       uint64_t seed);

// Camera with intrinsics rescaled to a new square resolution.
geom::PerspectiveCamera scale_camera(const geom::PerspectiveCamera& cam, int size);

std::vector<std::string> list_scene_dirs(const std::string& dataset_dir);
LoadedScene load_scene_dir(const std::string& dir);

// Loads the view whose directory is `view_dir` (scenes/<id>/views/<k>)
// together with its scene. Point caches are required only when
// `need_points` is set.
LoadedScene load_scene_of_view(const std::string& view_dir, int& view_index,
                               bool need_points = false);

}  // namespace hoir::pipeline
