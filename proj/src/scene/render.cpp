#include "hoir/scene/render.hpp"

#include <cmath>

namespace hoir::scene {

using geom::Vec3;

namespace {

// Write silhouette/depth/normal channels for every pixel the buffer assigns
// to `entity_id` (or to any entity when entity_id < 0).
void shade(const DepthBuffer& buf, const Scene& scene, const geom::PerspectiveCamera& cam,
           int entity_id, double z_ref, double depth_scale, Image& img) {
  const Eigen::Matrix3d r = cam.pose.linear();
  for (int y = 0; y < buf.height; ++y) {
    for (int x = 0; x < buf.width; ++x) {
      const size_t i = buf.at(x, y);
      const int8_t e = buf.entity[i];
      if (e < 0 || (entity_id >= 0 && e != entity_id)) continue;
      const TriangleMesh& mesh = e == 2 ? scene.object : scene.human;
      const Vec3 n_cam = r * mesh.face_normal(static_cast<size_t>(buf.face[i]));
      img.at(0, x, y) = 1.0f;
      img.at(1, x, y) = static_cast<float>((buf.depth[i] - z_ref) / depth_scale);
      img.at(2, x, y) = static_cast<float>(n_cam.x());
      img.at(3, x, y) = static_cast<float>(n_cam.y());
      img.at(4, x, y) = static_cast<float>(n_cam.z());
    }
  }
}

Mask entity_mask(const DepthBuffer& buf, int8_t id) {
  Mask m(buf.width, buf.height);
  for (int y = 0; y < buf.height; ++y)
    for (int x = 0; x < buf.width; ++x) m.set(x, y, buf.entity[buf.at(x, y)] == id);
  return m;
}

Image masked(const Image& img, const Mask& m) {
  Image out(img.width, img.height, img.channels);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        if (m.get(x, y)) out.at(c, x, y) = img.at(c, x, y);
  return out;
}

}  // namespace

ViewBundle render_view(const Scene& scene, const geom::PerspectiveCamera& cam) {
  ViewBundle vb;
  vb.cam = cam;

  const geom::Bbox box = scene.joint_bounds();
  vb.z_ref = cam.depth_of(box.center());
  vb.depth_scale = box.diagonal().norm();
  if (vb.z_ref <= 0.0) throw GeometryError("render_view: scene behind camera");

  vb.joint_depth = DepthBuffer(cam.width, cam.height);
  geom::rasterize(scene.human, cam, 1, vb.joint_depth);
  geom::rasterize(scene.object, cam, 2, vb.joint_depth);

  DepthBuffer human_only(cam.width, cam.height);
  geom::rasterize(scene.human, cam, 1, human_only);

  DepthBuffer object_only(cam.width, cam.height);
  geom::rasterize(scene.object, cam, 2, object_only);

  vb.prior_depth = DepthBuffer(cam.width, cam.height);
  geom::rasterize(scene.proxy, cam, 1, vb.prior_depth);
  geom::rasterize(scene.object, cam, 2, vb.prior_depth);

  vb.I_f = Image(cam.width, cam.height, kImageChannels);
  shade(vb.joint_depth, scene, cam, -1, vb.z_ref, vb.depth_scale, vb.I_f);

  vb.I_h = Image(cam.width, cam.height, kImageChannels);
  shade(human_only, scene, cam, 1, vb.z_ref, vb.depth_scale, vb.I_h);

  vb.I_o = Image(cam.width, cam.height, kImageChannels);
  shade(object_only, scene, cam, 2, vb.z_ref, vb.depth_scale, vb.I_o);

  vb.M_s = entity_mask(human_only, 1);
  vb.M_p = entity_mask(vb.joint_depth, 1);
  vb.M_o = entity_mask(object_only, 2);
  vb.M_i = geom::mask_subtract(vb.M_s, vb.M_p);

  // The partial human image: the ground-truth human raster restricted to the
  // pixels where the human stays in front in the joint render.
  vb.I_p = masked(vb.I_h, vb.M_p);

  vb.S_n = Image(cam.width, cam.height, kNormalChannels);
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x)
      for (int c = 0; c < kNormalChannels; ++c) vb.S_n.at(c, x, y) = vb.I_h.at(2 + c, x, y);

  return vb;
}

Image oracle_inpaint(const ViewBundle& view) { return view.I_h; }

}  // namespace hoir::scene
