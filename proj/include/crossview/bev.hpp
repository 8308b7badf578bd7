#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>

#include "crossview/camera.hpp"
#include "crossview/numeric.hpp"
#include "crossview/se3.hpp"
#include "crossview/types.hpp"

namespace crossview {

// Frame conventions used throughout:
//   camera: x right, y down, z forward (depth).
//   ego:    x forward, y left, z up; origin on the ground directly below
//           the camera center.
//   BEV:    square N x N grid over the ground plane, covering extent_z
//           meters ahead of the ego origin and extent_z / 2 to each side.
//           Row 0 is farthest ahead, column 0 is leftmost (+y in ego).
//   BEV metric frame: x along columns, y along rows, z the plane normal;
//           cell (row i, col j) has its center at ((j+0.5)c, (i+0.5)c, 0)
//           with c the cell size in meters.
struct BevSpec {
  int cells = 256;           // grid side length N
  double extent_z = 40.0;    // longitudinal range Z ahead of the vehicle, meters
  double camera_height = 1.5;  // ground-plane offset of the camera, meters

  BevSpec() = default;
  BevSpec(int cells_, double extent_z_, double camera_height_)
      : cells(cells_), extent_z(extent_z_), camera_height(camera_height_) {
    validate();
  }

  void validate() const {
    if (cells < 2) throw Error("bev: grid needs at least 2 cells per side");
    if (!(extent_z > 0.0)) throw Error("bev: extent must be positive");
    if (!std::isfinite(extent_z) || !std::isfinite(camera_height))
      throw Error("bev: non-finite parameter");
  }

  double cell_size() const { return extent_z / cells; }
};

// Per-cell forward distance over the BEV grid plus its projection into the
// front view. fv_z stores camera-frame depth of the ground point seen at
// each pixel; 0 means no valid ground intersection (fv_mask is 0 there).
struct DistanceField {
  Grid<double> bev_z;
  Grid<double> fv_z;
  Mask fv_mask;
};

// BEV-to-ego transform for the grid convention above: grid columns run
// ego -y (left to right), rows run ego -x (far to near), normal points down.
inline Se3Pose canonical_t_bev_ego(const BevSpec& spec) {
  Eigen::Matrix3d r;
  r << 0, -1, 0,  //
      -1, 0, 0,   //
      0, 0, -1;
  return Se3Pose(r, Eigen::Vector3d(spec.extent_z, spec.extent_z / 2.0, 0.0));
}

// Ego-to-camera transform for a camera height meters above the ego origin,
// tilted down by pitch radians about its own x axis.
inline Se3Pose level_t_ego_cam(double height, double pitch = 0.0) {
  Eigen::Matrix3d r0;
  r0 << 0, -1, 0,  //
      0, 0, -1,    //
      1, 0, 0;
  Eigen::Matrix3d r = rot_x(pitch) * r0;
  return Se3Pose(r, -(r * Eigen::Vector3d(0.0, 0.0, height)));
}

// Homography mapping homogeneous BEV cell coordinates (col, row, 1) to
// homogeneous pixel coordinates. Built from the 3x4 projection
// K [R|t] of t_ego_cam * t_bev_ego with the plane-normal column dropped,
// composed with the affine cell-to-meters lift.
inline Eigen::Matrix3d build_homography(const CameraIntrinsics& k, const Se3Pose& t_ego_cam,
                                        const Se3Pose& t_bev_ego, const BevSpec& spec) {
  const Se3Pose t_bev_cam = t_ego_cam * t_bev_ego;
  Eigen::Matrix<double, 3, 4> projection;
  projection.leftCols<3>() = t_bev_cam.rotation();
  projection.col(3) = t_bev_cam.translation();
  projection = k.matrix() * projection;

  Eigen::Matrix3d plane;  // columns: bev x, bev y, translation
  plane.col(0) = projection.col(0);
  plane.col(1) = projection.col(1);
  plane.col(2) = projection.col(3);

  const double c = spec.cell_size();
  Eigen::Matrix3d lift;
  lift << c, 0.0, 0.5 * c,  //
      0.0, c, 0.5 * c,      //
      0.0, 0.0, 1.0;

  Eigen::Matrix3d h = plane * lift;
  if (std::fabs(h.determinant()) < 1e-12)
    throw DegenerateHomography("build_homography: camera center lies on the ground plane");
  return h;
}

// Forward distance of each BEV cell center to the ego vehicle. Row 0 is
// farthest; values lie in (0, Z). Independent of any camera.
inline Grid<double> build_distance_field(const BevSpec& spec) {
  spec.validate();
  const int n = spec.cells;
  Grid<double> z(n, n);
  for (int i = 0; i < n; ++i) {
    const double zi = spec.extent_z * (n - i - 0.5) / n;
    for (int j = 0; j < n; ++j) z(i, j) = zi;
  }
  return z;
}

// Projects the BEV distance field into the front view by inverse mapping:
// each pixel's ray is intersected with the ground plane via the inverted
// homography. The hit is valid when the nearest BEV cell lies inside the
// grid, is road_mask-eligible, and the ground point is in front of the
// camera; fv_z then holds the exact camera-frame depth of the hit point.
inline DistanceField project_distance_field(const BevSpec& spec, const CameraIntrinsics& k,
                                            const Se3Pose& t_ego_cam, const Se3Pose& t_bev_ego,
                                            const std::optional<Mask>& road_mask,
                                            int out_height, int out_width) {
  spec.validate();
  if (out_height < 1 || out_width < 1)
    throw Error("project_distance_field: output size must be positive");
  if (road_mask &&
      (road_mask->rows() != spec.cells || road_mask->cols() != spec.cells))
    throw ShapeMismatch("project_distance_field: road mask does not match the BEV grid");

  const Eigen::Matrix3d h = build_homography(k, t_ego_cam, t_bev_ego, spec);
  const Eigen::Matrix3d h_inv = h.inverse();
  const double c = spec.cell_size();
  const int n = spec.cells;

  DistanceField field;
  field.bev_z = build_distance_field(spec);
  field.fv_z = Grid<double>(out_height, out_width, 0.0);
  field.fv_mask = Mask(out_height, out_width, 0);

  parallel_for(0, out_height, [&](int v) {
    for (int u = 0; u < out_width; ++u) {
      const Eigen::Vector3d q = h_inv * Eigen::Vector3d(u, v, 1.0);
      if (q.z() == 0.0) continue;
      const double col = q.x() / q.z();
      const double row = q.y() / q.z();
      if (!std::isfinite(col) || !std::isfinite(row)) continue;

      const long jc = std::llround(col);
      const long ic = std::llround(row);
      if (ic < 0 || ic >= n || jc < 0 || jc >= n) continue;
      if (road_mask && (*road_mask)(static_cast<int>(ic), static_cast<int>(jc)) == 0) continue;

      const Eigen::Vector3d p_bev((col + 0.5) * c, (row + 0.5) * c, 0.0);
      const Eigen::Vector3d p_cam = t_ego_cam.apply(t_bev_ego.apply(p_bev));
      if (!(p_cam.z() > 0.0)) continue;

      field.fv_z(v, u) = p_cam.z();
      field.fv_mask(v, u) = 1;
    }
  });
  return field;
}

}  // namespace crossview
