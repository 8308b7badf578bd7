#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>

#include "crossview/types.hpp"

namespace crossview {

// Rigid transform in SE(3). The rotation must be orthonormal with
// determinant +1 to within 1e-9 (max-norm of R^T R - I).
class Se3Pose {
 public:
  static constexpr double kOrthonormalTol = 1e-9;

  Se3Pose() : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}

  Se3Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
      : rotation_(rotation), translation_(translation) {
    validate();
  }

  // 12 row-major values of the 3x4 matrix [R | t].
  static Se3Pose from_matrix_row_major(const std::array<double, 12>& m) {
    Eigen::Matrix3d r;
    r << m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10];
    return Se3Pose(r, Eigen::Vector3d(m[3], m[7], m[11]));
  }

  std::array<double, 12> to_matrix_row_major() const {
    return {rotation_(0, 0), rotation_(0, 1), rotation_(0, 2), translation_(0),
            rotation_(1, 0), rotation_(1, 1), rotation_(1, 2), translation_(1),
            rotation_(2, 0), rotation_(2, 1), rotation_(2, 2), translation_(2)};
  }

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation_ * p + translation_; }

  Se3Pose inverse() const {
    Eigen::Matrix3d rt = rotation_.transpose();
    return Se3Pose(rt, -(rt * translation_));
  }

  // this * other: first apply other, then this.
  Se3Pose compose(const Se3Pose& other) const {
    return Se3Pose(rotation_ * other.rotation_,
                   rotation_ * other.translation_ + translation_);
  }

  Eigen::Matrix4d homogeneous() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation_;
    m.topRightCorner<3, 1>() = translation_;
    return m;
  }

  // Rotation angle in radians, from the trace.
  double rotation_angle() const {
    double c = 0.5 * (rotation_.trace() - 1.0);
    return std::acos(std::clamp(c, -1.0, 1.0));
  }

 private:
  void validate() const {
    if (!rotation_.allFinite() || !translation_.allFinite())
      throw Error("se3: non-finite entries");
    Eigen::Matrix3d err = rotation_.transpose() * rotation_ - Eigen::Matrix3d::Identity();
    if (err.cwiseAbs().maxCoeff() >= kOrthonormalTol)
      throw Error("se3: rotation is not orthonormal within 1e-9");
    if (rotation_.determinant() < 0.0)
      throw Error("se3: rotation has negative determinant");
  }

  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

inline Se3Pose operator*(const Se3Pose& a, const Se3Pose& b) { return a.compose(b); }

// Rotation about the x axis by angle radians.
inline Eigen::Matrix3d rot_x(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix3d r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

inline Eigen::Matrix3d rot_y(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix3d r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

inline Eigen::Matrix3d rot_z(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix3d r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

}  // namespace crossview
