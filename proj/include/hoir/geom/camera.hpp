#pragma once

#include "hoir/geom/mesh.hpp"

namespace hoir::geom {

struct PixelCoord {
  double u;
  double v;
  double depth;  // camera-space z
};

// Pinhole camera, OpenCV convention: x right, y down, z forward.
// pose is the rigid world-to-camera transform.
struct PerspectiveCamera {
  double fx = 500.0;
  double fy = 500.0;
  double cx = 256.0;
  double cy = 256.0;
  int width = 512;
  int height = 512;
  Rigid pose = Rigid::Identity();

  void validate() const;

  Vec3 to_camera(const Vec3& p) const { return pose * p; }
  double depth_of(const Vec3& p) const { return (pose * p).z(); }

  // Throws GeometryError when the camera-space z is <= 0.
  PixelCoord project(const Vec3& p) const;

  // Non-throwing variant; returns false when the point is at or behind the
  // image plane.
  bool try_project(const Vec3& p, PixelCoord& out) const;

  bool in_image(const PixelCoord& px) const {
    return px.u >= 0.0 && px.u < static_cast<double>(width) && px.v >= 0.0 &&
           px.v < static_cast<double>(height);
  }
};

// Camera at `eye` looking toward `target`, world `up` hint. y points down in
// the image as required by the projection convention.
PerspectiveCamera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fx, double fy,
                          int width, int height);

}  // namespace hoir::geom
