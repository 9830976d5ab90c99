#include "hoir/geom/camera.hpp"

namespace hoir::geom {

void PerspectiveCamera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw GeometryError("camera focal lengths must be positive");
  if (width <= 0 || height <= 0) throw GeometryError("camera raster size must be positive");
  if (cx < 0.0 || cx >= static_cast<double>(width) || cy < 0.0 || cy >= static_cast<double>(height))
    throw GeometryError("camera principal point outside the raster");
  const Mat3 r = pose.rotation();
  if ((r.transpose() * r - Mat3::Identity()).norm() >= 1e-6)
    throw GeometryError("camera pose rotation is not orthonormal");
}

PixelCoord PerspectiveCamera::project(const Vec3& p) const {
  PixelCoord px;
  if (!try_project(p, px)) throw GeometryError("point is behind the camera");
  return px;
}

bool PerspectiveCamera::try_project(const Vec3& p, PixelCoord& out) const {
  const Vec3 c = pose * p;
  if (!(c.z() > 0.0)) return false;
  out.u = fx * c.x() / c.z() + cx;
  out.v = fy * c.y() / c.z() + cy;
  out.depth = c.z();
  return true;
}

PerspectiveCamera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fx, double fy,
                          int width, int height) {
  Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(up).normalized();
  Vec3 down = forward.cross(right);  // y axis points down in image space
  Mat3 r;
  r.row(0) = right;
  r.row(1) = down;
  r.row(2) = forward;
  PerspectiveCamera cam;
  cam.fx = fx;
  cam.fy = fy;
  cam.width = width;
  cam.height = height;
  cam.cx = 0.5 * width;
  cam.cy = 0.5 * height;
  cam.pose = Rigid::Identity();
  cam.pose.linear() = r;
  cam.pose.translation() = -(r * eye);
  return cam;
}

}  // namespace hoir::geom
