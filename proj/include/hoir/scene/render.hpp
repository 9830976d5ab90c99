#pragma once

#include "hoir/geom/image.hpp"
#include "hoir/geom/raster.hpp"
#include "hoir/scene/scene.hpp"

namespace hoir::scene {

using geom::DepthBuffer;
using geom::Image;
using geom::Mask;

// Channel layout of the 5-channel rasters: 0 silhouette, 1 normalized depth,
// 2-4 camera-space flat normal. Background pixels hold zeros. Depth is
// (z - z_ref) / depth_scale with z_ref the camera depth of the joint
// bounding-box center and depth_scale its diagonal length.
inline constexpr int kImageChannels = 5;
inline constexpr int kNormalChannels = 3;

struct ViewBundle {
  geom::PerspectiveCamera cam;

  Image I_f;  // joint scene raster
  Image I_p;  // I_h restricted to M_p (partial human)
  Image I_h;  // complete human raster (self-occlusion only)
  Image I_o;  // object rendered alone
  Image S_n;  // 3-channel human normal raster

  Mask M_s;  // complete human silhouette
  Mask M_p;  // human pixels still in front in the joint raster
  Mask M_o;  // object-alone silhouette
  Mask M_i;  // occluded human region: M_s minus M_p

  DepthBuffer joint_depth;  // human + object
  DepthBuffer prior_depth;  // proxy + object, drives the visibility prior

  double z_ref = 0.0;
  double depth_scale = 1.0;
};

ViewBundle render_view(const Scene& scene, const geom::PerspectiveCamera& cam);

// Stand-in for a learned amodal completion: returns the ground-truth
// complete-human raster, which downstream code treats exactly like an
// inpainted image.
Image oracle_inpaint(const ViewBundle& view);

}  // namespace hoir::scene
