#pragma once

#include <Eigen/Dense>

#include "crossview/camera.hpp"
#include "crossview/image.hpp"
#include "crossview/numeric.hpp"
#include "crossview/se3.hpp"

namespace crossview {

// Lifts every pixel to a camera-frame 3-D point: depth * K^-1 (u, v, 1).
inline Grid<Eigen::Vector3d> backproject(const DepthMap& depth, const CameraIntrinsics& k) {
  const int h = depth.height();
  const int w = depth.width();
  Grid<Eigen::Vector3d> points(h, w);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) points(v, u) = unproject_pixel(k, u, v, depth(v, u));
  return points;
}

struct WarpResult {
  ImagePlane image;
  Mask valid;
};

// Inverse warp: each target pixel is back-projected with its depth,
// transformed by t_rel (target frame -> source frame), projected into the
// source camera and bilinearly sampled. Points that land behind the source
// camera (z <= 0) are invalid rather than clamped.
inline WarpResult warp_image(const ImagePlane& src, const DepthMap& depth, const Se3Pose& t_rel,
                             const CameraIntrinsics& k) {
  const int h = depth.height();
  const int w = depth.width();
  if (src.height() != h || src.width() != w)
    throw ShapeMismatch("warp_image: source image and depth map differ in size");

  Grid<double> coord_u(h, w, -1.0);
  Grid<double> coord_v(h, w, -1.0);
  Mask in_front(h, w, 0);

  const bool is_identity = t_rel.rotation().isIdentity(0.0) && t_rel.translation().isZero(0.0);
  if (is_identity) {
    // Identity pose: the sampling coordinates are the pixel grid itself.
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u) {
        coord_u(v, u) = u;
        coord_v(v, u) = v;
        in_front(v, u) = 1;
      }
    SampledImage sampled = bilinear_sample(src, coord_u, coord_v);
    return WarpResult{std::move(sampled.image), std::move(sampled.valid)};
  }

  parallel_for(0, h, [&](int v) {
    for (int u = 0; u < w; ++u) {
      const Eigen::Vector3d p = t_rel.apply(unproject_pixel(k, u, v, depth(v, u)));
      if (!(p.z() > 0.0)) continue;
      coord_u(v, u) = k.fx * p.x() / p.z() + k.cx;
      coord_v(v, u) = k.fy * p.y() / p.z() + k.cy;
      in_front(v, u) = 1;
    }
  });

  SampledImage sampled = bilinear_sample(src, coord_u, coord_v);
  WarpResult out{std::move(sampled.image), std::move(sampled.valid)};
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
      if (!in_front(v, u)) out.valid(v, u) = 0;
  return out;
}

}  // namespace crossview
