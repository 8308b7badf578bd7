#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "crossview/types.hpp"

namespace crossview {

// Pinhole camera, zero skew, no distortion.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  CameraIntrinsics() = default;
  CameraIntrinsics(double fx_, double fy_, double cx_, double cy_, int width_, int height_)
      : fx(fx_), fy(fy_), cx(cx_), cy(cy_), width(width_), height(height_) {
    validate();
  }

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw Error("intrinsics: focal lengths must be positive");
    if (width < 1 || height < 1) throw Error("intrinsics: image size must be at least 1x1");
    if (!std::isfinite(fx) || !std::isfinite(fy) || !std::isfinite(cx) || !std::isfinite(cy))
      throw Error("intrinsics: non-finite parameter");
  }

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d k;
    k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return k;
  }

  Eigen::Matrix3d inverse_matrix() const {
    Eigen::Matrix3d ki;
    ki << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
    return ki;
  }
};

struct PixelProjection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

// Projects a camera-frame point (x right, y down, z forward, meters) onto
// the image plane. Throws NonPositiveDepth for points at or behind the
// camera center.
inline PixelProjection project_point(const CameraIntrinsics& k, const Eigen::Vector3d& p_cam) {
  const double z = p_cam.z();
  if (!(z > 0.0)) throw NonPositiveDepth("project_point: point has non-positive depth");
  PixelProjection out;
  out.u = k.fx * p_cam.x() / z + k.cx;
  out.v = k.fy * p_cam.y() / z + k.cy;
  out.depth = z;
  return out;
}

// Ray through pixel (u, v) scaled to the given depth.
inline Eigen::Vector3d unproject_pixel(const CameraIntrinsics& k, double u, double v,
                                       double depth) {
  return {depth * (u - k.cx) / k.fx, depth * (v - k.cy) / k.fy, depth};
}

}  // namespace crossview
