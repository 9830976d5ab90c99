#include "hoir/pipeline/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "hoir/scene/render.hpp"

namespace hoir::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kPointMagic[4] = {'H', 'O', 'P', 'T'};

void write_bytes(std::ofstream& out, const void* p, size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& in, void* p, size_t n, const std::string& what) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) throw IoError("point cache: truncated " + what);
}

json rigid_to_json(const geom::Rigid& t) {
  json a = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) a.push_back(t.matrix()(r, c));
  return a;
}

geom::Rigid rigid_from_json(const json& a) {
  if (!a.is_array() || a.size() != 12) throw ConfigError("scene.json: pose must be 12 numbers");
  geom::Rigid t = geom::Rigid::Identity();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) t.matrix()(r, c) = a.at(static_cast<size_t>(r) * 4 + c).get<double>();
  return t;
}

json camera_to_json(const geom::PerspectiveCamera& cam) {
  return json{{"fx", cam.fx},       {"fy", cam.fy},     {"cx", cam.cx},
              {"cy", cam.cy},       {"width", cam.width}, {"height", cam.height},
              {"pose", rigid_to_json(cam.pose)}};
}

geom::PerspectiveCamera camera_from_json(const json& j) {
  geom::PerspectiveCamera cam;
  cam.fx = j.at("fx").get<double>();
  cam.fy = j.at("fy").get<double>();
  cam.cx = j.at("cx").get<double>();
  cam.cy = j.at("cy").get<double>();
  cam.width = j.at("width").get<int>();
  cam.height = j.at("height").get<int>();
  cam.pose = rigid_from_json(j.at("pose"));
  cam.validate();
  return cam;
}

geom::Image depth_to_image(const geom::DepthBuffer& buf) {
  geom::Image img;
  img.width = buf.width;
  img.height = buf.height;
  img.channels = 1;
  img.data.assign(buf.depth.begin(), buf.depth.end());
  return img;
}

geom::DepthBuffer depth_from_image(const geom::Image& img) {
  geom::DepthBuffer buf(img.width, img.height);
  for (size_t i = 0; i < buf.depth.size(); ++i) {
    buf.depth[i] = img.data[i];
    buf.entity[i] = std::isfinite(img.data[i]) ? int8_t{0} : int8_t{-1};
  }
  return buf;
}

std::vector<float> flatten_sigma(const std::vector<prior::PriorFeature>& feats) {
  std::vector<float> out;
  out.reserve(feats.size() * 3);
  for (const auto& f : feats) {
    out.push_back(f.d);
    out.push_back(f.v);
    out.push_back(f.z);
  }
  return out;
}

std::string scene_dir_name(int index) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%03d", index);
  return buf;
}

}  // namespace

void write_point_cache(const std::string& path, const PointCache& cache) {
  const size_t n = cache.size();
  if (cache.occ_h.size() != n || cache.occ_o.size() != n)
    throw IoError("point cache: label arrays out of step with points");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("point cache: cannot open " + path + " for writing");

  write_bytes(out, kPointMagic, 4);
  const uint32_t count = static_cast<uint32_t>(n);
  write_bytes(out, &count, 4);
  write_bytes(out, &cache.entity, 1);
  for (const Vec3& p : cache.points) {
    const float xyz[3] = {static_cast<float>(p.x()), static_cast<float>(p.y()),
                          static_cast<float>(p.z())};
    write_bytes(out, xyz, 12);
  }
  for (size_t i = 0; i < n; ++i) {
    const uint8_t label = static_cast<uint8_t>((cache.occ_h[i] ? 1 : 0) | (cache.occ_o[i] ? 2 : 0));
    write_bytes(out, &label, 1);
  }
  for (const auto& view : cache.sigma) {
    for (const auto& block : view) {
      if (block.size() != n * 3) throw IoError("point cache: sigma block size mismatch");
      write_bytes(out, block.data(), block.size() * 4);
    }
  }
  if (!out) throw IoError("point cache: write failed for " + path);
}

PointCache read_point_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("point cache: cannot open " + path);
  const uintmax_t file_size = fs::file_size(path);

  char magic[4];
  read_bytes(in, magic, 4, "magic");
  if (std::memcmp(magic, kPointMagic, 4) != 0)
    throw IoError("point cache: bad magic in " + path);
  uint32_t count = 0;
  read_bytes(in, &count, 4, "count");
  PointCache cache;
  read_bytes(in, &cache.entity, 1, "entity tag");

  const size_t n = count;
  cache.points.resize(n);
  for (size_t i = 0; i < n; ++i) {
    float xyz[3];
    read_bytes(in, xyz, 12, "points");
    cache.points[i] = Vec3(xyz[0], xyz[1], xyz[2]);
  }
  cache.occ_h.resize(n);
  cache.occ_o.resize(n);
  for (size_t i = 0; i < n; ++i) {
    uint8_t label = 0;
    read_bytes(in, &label, 1, "labels");
    cache.occ_h[i] = label & 1;
    cache.occ_o[i] = (label >> 1) & 1;
  }

  // Appended pose features: 2 blocks of 3n floats per view; the view count
  // is whatever the remaining length divides into.
  const uintmax_t base = 9 + n * 13;
  if (file_size < base) throw IoError("point cache: truncated file " + path);
  const uintmax_t rest = file_size - base;
  const uintmax_t per_view = static_cast<uintmax_t>(n) * 3 * 4 * 2;
  if (per_view > 0) {
    if (rest % per_view != 0)
      throw IoError("point cache: appended pose-feature bytes are not a whole number of views in " +
                    path);
    const size_t n_views = static_cast<size_t>(rest / per_view);
    cache.sigma.resize(n_views);
    for (size_t v = 0; v < n_views; ++v)
      for (auto& block : cache.sigma[v]) {
        block.resize(n * 3);
        read_bytes(in, block.data(), block.size() * 4, "pose features");
      }
  }
  return cache;
}

geom::PerspectiveCamera scale_camera(const geom::PerspectiveCamera& cam, int size) {
  geom::PerspectiveCamera out = cam;
  const double sx = static_cast<double>(size) / cam.width;
  const double sy = static_cast<double>(size) / cam.height;
  out.fx = cam.fx * sx;
  out.fy = cam.fy * sy;
  out.cx = cam.cx * sx;
  out.cy = cam.cy * sy;
  out.width = size;
  out.height = size;
  return out;
}

sampling::LabeledPoints LoadedScene::pool() const {
  sampling::LabeledPoints p;
  const size_t total = cache_h.size() + cache_o.size();
  p.points.reserve(total);
  p.entity.reserve(total);
  p.occ_h.reserve(total);
  p.occ_o.reserve(total);
  for (const PointCache* c : {&cache_h, &cache_o}) {
    for (size_t i = 0; i < c->size(); ++i) {
      p.points.push_back(c->points[i]);
      p.entity.push_back(c->entity);
      p.occ_h.push_back(c->occ_h[i]);
      p.occ_o.push_back(c->occ_o[i]);
    }
  }
  return p;
}

std::vector<std::string> write_dataset(const std::string& out_dir, const ExperimentConfig& cfg,
                                       uint64_t seed) {
  cfg.validate();
  std::vector<std::string> dirs;
  const geom::PerspectiveCamera base = scale_camera(geom::PerspectiveCamera{}, cfg.render_size());

  for (int s = 0; s < cfg.data.n_scenes; ++s) {
    const uint64_t scene_seed = derive_seed(seed, derive_seed(hash_seed("scene"), s));
    const scene::Scene sc = scene::compose_scene(scene_seed, cfg.data.human_resolution);
    const std::vector<scene::ViewSpec> specs =
        scene::place_views(sc, base, cfg.data.views, derive_seed(scene_seed, hash_seed("views")));

    const fs::path dir = fs::path(out_dir) / "scenes" / scene_dir_name(s);
    fs::create_directories(dir / "meshes");
    geom::write_obj((dir / "meshes" / "human.obj").string(), sc.human);
    geom::write_obj((dir / "meshes" / "proxy.obj").string(), sc.proxy);
    geom::write_obj((dir / "meshes" / "object.obj").string(), sc.object);

    sampling::LabeledPoints pool =
        sampling::sample_scene_points(sc, cfg.sampler, derive_seed(scene_seed, hash_seed("points")));
    PointCache cache_h, cache_o;
    cache_h.entity = 0;
    cache_o.entity = 1;
    for (size_t i = 0; i < pool.size(); ++i) {
      PointCache& c = pool.entity[i] == 0 ? cache_h : cache_o;
      c.points.push_back(pool.points[i]);
      c.occ_h.push_back(pool.occ_h[i]);
      c.occ_o.push_back(pool.occ_o[i]);
    }

    json views_json = json::array();
    for (size_t k = 0; k < specs.size(); ++k) {
      const scene::ViewBundle bundle = scene::render_view(sc, specs[k].camera);
      const fs::path vdir = dir / "views" / std::to_string(k);
      fs::create_directories(vdir);
      geom::write_pfm((vdir / "If.pfm").string(), bundle.I_f);
      geom::write_pfm((vdir / "Ip.pfm").string(), bundle.I_p);
      geom::write_pfm((vdir / "Ih.pfm").string(), bundle.I_h);
      geom::write_pfm((vdir / "Io.pfm").string(), bundle.I_o);
      geom::write_pfm((vdir / "Sn.pfm").string(), bundle.S_n);
      geom::write_png_gray((vdir / "Ms.png").string(), bundle.M_s);
      geom::write_png_gray((vdir / "Mp.png").string(), bundle.M_p);
      geom::write_png_gray((vdir / "Mo.png").string(), bundle.M_o);
      geom::write_png_gray((vdir / "Mi.png").string(), bundle.M_i);
      geom::write_pfm((vdir / "depth.pfm").string(), depth_to_image(bundle.joint_depth));
      geom::write_pfm((vdir / "depth_prior.pfm").string(), depth_to_image(bundle.prior_depth));

      const prior::PosePrior pp(sc, bundle, cfg.prior);
      const uint64_t sig_seed = derive_seed(scene_seed, derive_seed(hash_seed("sigma"), k));
      cache_h.sigma.push_back(
          {flatten_sigma(pp.batch(cache_h.points, prior::Entity::kHuman, derive_seed(sig_seed, 0))),
           flatten_sigma(pp.batch(cache_h.points, prior::Entity::kObject, derive_seed(sig_seed, 1)))});
      cache_o.sigma.push_back(
          {flatten_sigma(pp.batch(cache_o.points, prior::Entity::kHuman, derive_seed(sig_seed, 2))),
           flatten_sigma(pp.batch(cache_o.points, prior::Entity::kObject, derive_seed(sig_seed, 3)))});

      views_json.push_back(json{{"index", k},
                                {"azimuth", specs[k].azimuth},
                                {"translation",
                                 {specs[k].translation.x(), specs[k].translation.y(),
                                  specs[k].translation.z()}},
                                {"camera", camera_to_json(bundle.cam)},
                                {"z_ref", bundle.z_ref},
                                {"depth_scale", bundle.depth_scale}});
    }

    write_point_cache((dir / "points_h.hopt").string(), cache_h);
    write_point_cache((dir / "points_o.hopt").string(), cache_o);

    json sj;
    sj["seed"] = scene_seed;
    sj["object_kind"] = static_cast<int>(sc.object_kind);
    sj["object_scale"] = sc.object_scale;
    sj["object_pose"] = rigid_to_json(sc.object_pose);
    sj["views"] = std::move(views_json);
    std::ofstream out(dir / "scene.json");
    if (!out) throw IoError("dataset: cannot write scene.json in " + dir.string());
    out << sj.dump(2) << "\n";

    dirs.push_back(dir.string());
  }
  return dirs;
}

std::vector<std::string> list_scene_dirs(const std::string& dataset_dir) {
  const fs::path root = fs::path(dataset_dir) / "scenes";
  if (!fs::is_directory(root)) throw IoError("dataset: no scenes/ directory under " + dataset_dir);
  std::vector<std::string> dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) dirs.push_back(entry.path().string());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw IoError("dataset: scenes/ directory is empty under " + dataset_dir);
  return dirs;
}

LoadedScene load_scene_dir(const std::string& dir) {
  const fs::path root(dir);
  std::ifstream in(root / "scene.json");
  if (!in) throw IoError("dataset: cannot open " + (root / "scene.json").string());
  json sj;
  try {
    in >> sj;
  } catch (const json::exception& e) {
    throw IoError("dataset: invalid scene.json in " + dir + ": " + e.what());
  }

  LoadedScene out;
  out.dir = dir;
  try {
    out.seed = sj.at("seed").get<uint64_t>();
    out.scene.seed = out.seed;
    out.scene.object_kind = static_cast<scene::ObjectKind>(sj.at("object_kind").get<int>());
    out.scene.object_scale = sj.at("object_scale").get<double>();
    out.scene.object_pose = rigid_from_json(sj.at("object_pose"));
    out.scene.human = geom::read_obj((root / "meshes" / "human.obj").string());
    out.scene.proxy = geom::read_obj((root / "meshes" / "proxy.obj").string());
    out.scene.object = geom::read_obj((root / "meshes" / "object.obj").string());

    for (const json& vj : sj.at("views")) {
      LoadedView lv;
      lv.azimuth = vj.at("azimuth").get<double>();
      const json& tr = vj.at("translation");
      lv.translation = Vec3(tr.at(0).get<double>(), tr.at(1).get<double>(), tr.at(2).get<double>());
      const fs::path vdir = root / "views" / std::to_string(out.views.size());

      scene::ViewBundle& b = lv.bundle;
      b.cam = camera_from_json(vj.at("camera"));
      b.I_f = geom::read_pfm((vdir / "If.pfm").string(), scene::kImageChannels);
      b.I_p = geom::read_pfm((vdir / "Ip.pfm").string(), scene::kImageChannels);
      b.I_h = geom::read_pfm((vdir / "Ih.pfm").string(), scene::kImageChannels);
      b.I_o = geom::read_pfm((vdir / "Io.pfm").string(), scene::kImageChannels);
      b.S_n = geom::read_pfm((vdir / "Sn.pfm").string(), scene::kNormalChannels);
      b.M_s = geom::read_png_gray((vdir / "Ms.png").string());
      b.M_p = geom::read_png_gray((vdir / "Mp.png").string());
      b.M_o = geom::read_png_gray((vdir / "Mo.png").string());
      b.M_i = geom::read_png_gray((vdir / "Mi.png").string());
      b.joint_depth = depth_from_image(geom::read_pfm((vdir / "depth.pfm").string(), 1));
      b.prior_depth = depth_from_image(geom::read_pfm((vdir / "depth_prior.pfm").string(), 1));
      b.z_ref = vj.at("z_ref").get<double>();
      b.depth_scale = vj.at("depth_scale").get<double>();
      out.views.push_back(std::move(lv));
    }
  } catch (const json::exception& e) {
    throw IoError("dataset: malformed scene.json in " + dir + ": " + e.what());
  }

  const fs::path cache_h = root / "points_h.hopt";
  if (fs::exists(cache_h)) {
    out.cache_h = read_point_cache(cache_h.string());
    out.cache_o = read_point_cache((root / "points_o.hopt").string());
    if (out.cache_h.entity != 0 || out.cache_o.entity != 1)
      throw IoError("dataset: point cache entity tags are swapped in " + dir);
  }
  return out;
}

LoadedScene load_scene_of_view(const std::string& view_dir, int& view_index, bool need_points) {
  fs::path vp = fs::path(view_dir);
  if (vp.filename().empty()) vp = vp.parent_path();  // tolerate trailing slash
  const fs::path scene_dir = vp.parent_path().parent_path();
  try {
    view_index = std::stoi(vp.filename().string());
  } catch (const std::exception&) {
    throw IoError("dataset: view directory name is not an index: " + view_dir);
  }
  LoadedScene sc = load_scene_dir(scene_dir.string());
  if (view_index < 0 || static_cast<size_t>(view_index) >= sc.views.size())
    throw IoError("dataset: view index " + std::to_string(view_index) + " out of range in " +
                  scene_dir.string());
  if (need_points && sc.cache_h.size() == 0)
    throw IoError("dataset: point caches missing in " + scene_dir.string());
  return sc;
}

}  // namespace hoir::pipeline
