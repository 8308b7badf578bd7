#pragma once

// Synthetic flat-road benchmark: a deterministic procedural ground texture
// rendered through a pinhole camera mounted at a fixed height, with exact
// analytic depth. The scene supplies ground truth for warp consistency
// checks and for end-to-end metric scale recovery.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "crossview/bev.hpp"
#include "crossview/camera.hpp"
#include "crossview/depth_loss.hpp"
#include "crossview/image.hpp"
#include "crossview/metrics.hpp"
#include "crossview/numeric.hpp"
#include "crossview/se3.hpp"
#include "crossview/types.hpp"

namespace crossview {

// Band-limited sum of seeded sinusoids over the ground plane. Smooth at
// sub-meter scale, with nonvanishing gradients almost everywhere, and
// bounded inside (0.1, 0.9) so rendered intensities stay in [0, 1].
class GroundTexture {
 public:
  explicit GroundTexture(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(0.5, 1.0);
    std::uniform_real_distribution<double> freq(0.05, 0.6);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    double total = 0.0;
    for (int i = 0; i < kWaves; ++i) {
      amplitude_[i] = amp(rng);
      total += amplitude_[i];
      const double f = freq(rng);
      const double a = angle(rng);
      freq_x_[i] = f * std::cos(a);
      freq_y_[i] = f * std::sin(a);
      phase_[i] = angle(rng);
    }
    for (int i = 0; i < kWaves; ++i) amplitude_[i] *= 0.4 / total;
  }

  double operator()(double x, double y) const {
    double v = 0.5;
    for (int i = 0; i < kWaves; ++i)
      v += amplitude_[i] * std::sin(freq_x_[i] * x + freq_y_[i] * y + phase_[i]);
    return v;
  }

 private:
  static constexpr int kWaves = 8;
  double amplitude_[kWaves];
  double freq_x_[kWaves];
  double freq_y_[kWaves];
  double phase_[kWaves];
};

struct SyntheticScene {
  std::uint64_t seed = 7;
  double camera_height = 1.5;  // meters above the ground plane
  double pitch = 0.0;          // downward camera tilt, radians
  CameraIntrinsics intrinsics;
  BevSpec bev;
  std::vector<Se3Pose> poses;  // ego-to-world per frame
  Mask road_mask;              // BEV cells carrying the distance field

  void validate() const {
    intrinsics.validate();
    bev.validate();
    if (!(camera_height > 0.0))
      throw Error("SyntheticScene: camera_height must be positive");
    if (poses.empty()) throw Error("SyntheticScene: need at least one pose");
    if (road_mask.rows() != bev.cells || road_mask.cols() != bev.cells)
      throw ShapeMismatch("SyntheticScene: road_mask must match the BEV grid");
  }

  Se3Pose t_ego_cam() const { return level_t_ego_cam(camera_height, pitch); }

  // Camera-to-world transform of a frame.
  Se3Pose camera_pose(std::size_t frame) const {
    return poses.at(frame) * t_ego_cam().inverse();
  }
};

// A flat-road scene with a centered road band, a level camera, and a
// second frame displaced forward by half a meter.
inline SyntheticScene make_default_scene(std::uint64_t seed) {
  SyntheticScene scene;
  scene.seed = seed;
  scene.intrinsics = CameraIntrinsics{200.0, 200.0, 159.5, 119.5, 320, 240};
  scene.bev = BevSpec{};
  scene.poses = {Se3Pose(),
                 Se3Pose(Eigen::Matrix3d::Identity(),
                         Eigen::Vector3d(0.5, 0.0, 0.0))};
  scene.road_mask = Mask(scene.bev.cells, scene.bev.cells, 0);
  for (int r = 0; r < scene.bev.cells; ++r)
    for (int c = scene.bev.cells / 4; c < 3 * scene.bev.cells / 4; ++c)
      scene.road_mask(r, c) = 1;
  return scene;
}

struct RenderedFrame {
  ImagePlane image;     // single-channel intensity
  Grid<double> depth;   // camera-frame depth in meters; 0 where invalid
  Mask valid;           // 1 where the pixel ray hits the ground
};

// Renders one frame by intersecting each pixel ray with the ground plane
// and sampling the procedural texture at the hit point. Pixels whose rays
// do not descend toward the plane are invalid sky.
inline RenderedFrame render_scene(const SyntheticScene& scene,
                                  std::size_t frame) {
  scene.validate();
  const CameraIntrinsics& k = scene.intrinsics;
  const GroundTexture texture(scene.seed);
  const Se3Pose cam_to_world = scene.camera_pose(frame);
  const Eigen::Matrix3d r = cam_to_world.rotation();
  const Eigen::Vector3d origin = cam_to_world.translation();

  RenderedFrame out{ImagePlane(k.height, k.width, 1),
                    Grid<double>(k.height, k.width, 0.0),
                    Mask(k.height, k.width, 0)};
  parallel_for(0, k.height, [&](int v) {
    for (int u = 0; u < k.width; ++u) {
      const Eigen::Vector3d dir_cam((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
      const Eigen::Vector3d dir = r * dir_cam;
      if (!(dir.z() < 0.0)) continue;  // parallel to or away from the ground
      const double lambda = -origin.z() / dir.z();
      if (!(lambda > 0.0) || !std::isfinite(lambda)) continue;
      const Eigen::Vector3d hit = origin + lambda * dir;
      out.image(v, u, 0) = texture(hit.x(), hit.y());
      out.depth(v, u) = lambda;  // dir_cam has unit z, so depth = lambda
      out.valid(v, u) = 1;
    }
  });
  return out;
}

struct ScaleRecoveryResult {
  double true_scale = 1.0;
  double recovered_scale = 1.0;
  double cgt_residual = 0.0;   // distance-field loss at the fitted scale
  DepthMetrics depth;          // rescaled prediction vs ground truth,
                               // no median scaling
};

// End-to-end scale recovery: divide the rendered ground-truth depth by an
// unknown factor (optionally with multiplicative noise), fit the scale
// against the projected distance field, and evaluate the rescaled depth.
inline ScaleRecoveryResult scale_recovery_experiment(
    const SyntheticScene& scene, double true_scale,
    double noise_amplitude = 0.0, std::uint64_t noise_seed = 1234) {
  scene.validate();
  if (!(true_scale > 0.0))
    throw Error("scale_recovery_experiment: scale must be positive");
  const RenderedFrame frame = render_scene(scene, 0);

  DistanceField field = project_distance_field(
      scene.bev, scene.intrinsics, scene.t_ego_cam(),
      canonical_t_bev_ego(scene.bev), scene.road_mask,
      scene.intrinsics.height, scene.intrinsics.width);
  for (int r = 0; r < field.fv_mask.rows(); ++r)
    for (int c = 0; c < field.fv_mask.cols(); ++c)
      if (!frame.valid(r, c)) field.fv_mask(r, c) = 0;

  std::mt19937_64 rng(noise_seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  Grid<double> pred_values(frame.depth.rows(), frame.depth.cols(), 1.0);
  Grid<double> gt_values(frame.depth.rows(), frame.depth.cols(), 1.0);
  for (int r = 0; r < frame.depth.rows(); ++r)
    for (int c = 0; c < frame.depth.cols(); ++c) {
      if (!frame.valid(r, c)) continue;
      gt_values(r, c) = frame.depth(r, c);
      const double noise =
          noise_amplitude > 0.0 ? 1.0 + noise_amplitude * jitter(rng) : 1.0;
      pred_values(r, c) = frame.depth(r, c) / true_scale * noise;
    }
  const DepthMap pred(pred_values);
  const DepthMap gt(gt_values);

  const FitScaleResult fit = fit_scale(pred, field);

  Grid<double> rescaled = pred_values;
  for (double& v : rescaled.data()) v *= fit.scale;

  DepthEvalConfig eval;
  eval.apply_median_scaling = false;
  ScaleRecoveryResult out;
  out.true_scale = true_scale;
  out.recovered_scale = fit.scale;
  out.cgt_residual = fit.objective;
  out.depth = depth_metrics(DepthMap(std::move(rescaled)), gt, frame.valid, eval);
  return out;
}

}  // namespace crossview
