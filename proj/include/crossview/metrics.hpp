#pragma once

// Evaluation stack: monocular depth error metrics with optional median
// scale alignment, KITTI-style odometry drift over 100..800 m segments,
// and BEV layout segmentation metrics (IoU at a fixed threshold plus
// average precision over the swept score range).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <utility>
#include <vector>

#include "crossview/image.hpp"
#include "crossview/numeric.hpp"
#include "crossview/se3.hpp"
#include "crossview/types.hpp"

namespace crossview {

struct Trajectory {
  std::vector<Se3Pose> poses;  // camera-to-world

  void validate() const {
    if (poses.size() < 2)
      throw TrajectoryTooShort("Trajectory: need at least two poses");
  }
};

struct DepthEvalConfig {
  double min_depth = 1e-3;  // meters
  double max_depth = 80.0;  // meters
  bool apply_median_scaling = true;

  void validate() const {
    if (!(min_depth > 0.0) || !(max_depth > min_depth))
      throw Error("DepthEvalConfig: require 0 < min_depth < max_depth");
  }
};

struct DepthMetrics {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;       // meters
  double rmse_log = 0.0;
  double scale_factor = 1.0;
  std::size_t valid_count = 0;
};

namespace detail {

inline double median_inplace(std::vector<double>& v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (n % 2 == 0) {
    const double lower = *std::max_element(v.begin(), v.begin() + mid);
    m = 0.5 * (lower + m);
  }
  return m;
}

}  // namespace detail

// Standard depth error metrics over pixels where the mask is set and the
// ground truth lies inside [min_depth, max_depth]. The scale factor is
// median(gt) / median(pred); when median scaling is enabled the prediction
// is multiplied by it before the errors. Predictions are clamped to the
// evaluation depth range either way.
inline DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt,
                                  const Mask& valid,
                                  const DepthEvalConfig& cfg) {
  cfg.validate();
  if (pred.height() != gt.height() || pred.width() != gt.width() ||
      valid.rows() != gt.height() || valid.cols() != gt.width())
    throw ShapeMismatch("depth_metrics: shapes differ");

  std::vector<double> p, g;
  for (int r = 0; r < gt.height(); ++r)
    for (int c = 0; c < gt.width(); ++c) {
      if (!valid(r, c)) continue;
      const double gv = gt(r, c);
      if (gv < cfg.min_depth || gv > cfg.max_depth) continue;
      p.push_back(pred(r, c));
      g.push_back(gv);
    }
  if (g.empty()) throw NoValidPixels("depth_metrics: no valid pixels");

  DepthMetrics out;
  out.valid_count = g.size();
  {
    std::vector<double> pm = p, gm = g;
    out.scale_factor =
        detail::median_inplace(gm) / detail::median_inplace(pm);
  }
  const double s = cfg.apply_median_scaling ? out.scale_factor : 1.0;

  ExactSum abs_rel, sq_rel, sq, sq_log;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double pv = std::clamp(s * p[i], cfg.min_depth, cfg.max_depth);
    const double diff = g[i] - pv;
    abs_rel.add(std::abs(diff) / g[i]);
    sq_rel.add(diff * diff / g[i]);
    sq.add(diff * diff);
    const double dl = std::log(g[i]) - std::log(pv);
    sq_log.add(dl * dl);
  }
  const double n = static_cast<double>(g.size());
  out.abs_rel = abs_rel.result() / n;
  out.sq_rel = sq_rel.result() / n;
  out.rmse = std::sqrt(sq.result() / n);
  out.rmse_log = std::sqrt(sq_log.result() / n);
  return out;
}

struct ScaleFactorStats {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
};

inline ScaleFactorStats scale_factor_stats(const std::vector<double>& scales) {
  if (scales.empty()) throw NoValidPixels("scale_factor_stats: no frames");
  ExactSum sum;
  for (double s : scales) sum.add(s);
  ScaleFactorStats out;
  out.mean = sum.result() / scales.size();
  ExactSum var;
  for (double s : scales) var.add((s - out.mean) * (s - out.mean));
  out.stddev = std::sqrt(var.result() / scales.size());
  return out;
}

struct OdometryDrift {
  double t_err_percent = 0.0;       // translational drift, %
  double r_err_deg_per_100m = 0.0;  // rotational drift, deg per 100 m
  std::size_t segments = 0;
};

namespace detail {

inline std::vector<double> trajectory_distances(const Trajectory& t) {
  std::vector<double> dist(t.poses.size(), 0.0);
  for (std::size_t i = 1; i < t.poses.size(); ++i)
    dist[i] = dist[i - 1] + (t.poses[i].translation() -
                             t.poses[i - 1].translation())
                                .norm();
  return dist;
}

// First frame whose accumulated path distance strictly exceeds the segment
// start distance plus len, or -1 when the trajectory ends first.
inline int last_frame_for_segment(const std::vector<double>& dist, int first,
                                  double len) {
  for (std::size_t i = first; i < dist.size(); ++i)
    if (dist[i] > dist[first] + len) return static_cast<int>(i);
  return -1;
}

}  // namespace detail

// KITTI odometry drift: for segment lengths 100..800 m measured along the
// ground-truth path and every step-th start frame, compare the relative
// end-to-end transforms of prediction and ground truth. Translation errors
// are normalized by segment length (in percent), rotation angles by length
// (in degrees per 100 m), then averaged over all segments.
inline OdometryDrift odometry_drift(const Trajectory& pred,
                                    const Trajectory& gt, int step = 10) {
  pred.validate();
  gt.validate();
  if (pred.poses.size() != gt.poses.size())
    throw ShapeMismatch("odometry_drift: trajectory lengths differ");
  if (step < 1) throw Error("odometry_drift: step must be >= 1");

  static constexpr double kLengths[] = {100.0, 200.0, 300.0, 400.0,
                                        500.0, 600.0, 700.0, 800.0};
  const std::vector<double> dist = detail::trajectory_distances(gt);

  ExactSum t_acc, r_acc;
  std::size_t count = 0;
  for (int first = 0; first < static_cast<int>(gt.poses.size());
       first += step) {
    for (double len : kLengths) {
      const int last = detail::last_frame_for_segment(dist, first, len);
      if (last < 0) continue;
      const Se3Pose delta_gt = gt.poses[first].inverse() * gt.poses[last];
      const Se3Pose delta_pred =
          pred.poses[first].inverse() * pred.poses[last];
      const Se3Pose error = delta_pred.inverse() * delta_gt;
      t_acc.add(error.translation().norm() / len);
      r_acc.add(error.rotation_angle() / len);
      ++count;
    }
  }
  if (count == 0)
    throw TrajectoryTooShort("odometry_drift: no 100 m segment fits");

  OdometryDrift out;
  out.segments = count;
  out.t_err_percent = 100.0 * t_acc.result() / count;
  out.r_err_deg_per_100m =
      (180.0 / std::numbers::pi) * 100.0 * r_acc.result() / count;
  return out;
}

struct LayoutMetrics {
  double iou_fg_percent = 0.0;   // foreground IoU at threshold 0.5
  double iou_bg_percent = 0.0;
  double miou_percent = 0.0;     // mean of the two
  double map_percent = 0.0;      // average precision of the foreground
};

namespace detail {

// Average precision by sweeping every distinct score as a threshold
// (predicted positive when score >= threshold), applying the
// recall-monotone precision envelope, and integrating trapezoidally over
// recall with a flat extension to recall zero.
inline double average_precision(const Grid<double>& pred, const Mask& gt) {
  std::size_t positives = 0;
  for (std::uint8_t v : gt.data()) positives += v;
  if (positives == 0) return 1.0;

  std::vector<std::pair<double, std::uint8_t>> scored;
  scored.reserve(pred.data().size());
  for (int r = 0; r < pred.rows(); ++r)
    for (int c = 0; c < pred.cols(); ++c)
      scored.emplace_back(pred(r, c), gt(r, c));
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  // One PR point per distinct score, taken after absorbing all ties.
  std::vector<double> recall, precision;
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < scored.size()) {
    const double score = scored[i].first;
    while (i < scored.size() && scored[i].first == score) {
      (scored[i].second ? tp : fp) += 1;
      ++i;
    }
    recall.push_back(static_cast<double>(tp) / positives);
    precision.push_back(static_cast<double>(tp) / (tp + fp));
  }

  for (std::size_t k = precision.size() - 1; k-- > 0;)
    precision[k] = std::max(precision[k], precision[k + 1]);

  double ap = 0.0;
  double prev_r = 0.0, prev_p = precision.front();
  for (std::size_t k = 0; k < recall.size(); ++k) {
    ap += (recall[k] - prev_r) * 0.5 * (precision[k] + prev_p);
    prev_r = recall[k];
    prev_p = precision[k];
  }
  return ap;
}

}  // namespace detail

// IoU of foreground and background at threshold 0.5 plus average precision
// of the foreground class. An empty-union channel counts as a perfect 1.
inline LayoutMetrics layout_metrics(const Grid<double>& pred, const Mask& gt) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols())
    throw ShapeMismatch("layout_metrics: shapes differ");

  std::size_t inter_fg = 0, union_fg = 0, inter_bg = 0, union_bg = 0;
  for (int r = 0; r < pred.rows(); ++r)
    for (int c = 0; c < pred.cols(); ++c) {
      const bool p = pred(r, c) > 0.5;
      const bool g = gt(r, c) != 0;
      inter_fg += p && g;
      union_fg += p || g;
      inter_bg += !p && !g;
      union_bg += !p || !g;
    }
  const auto iou = [](std::size_t i, std::size_t u) {
    return u == 0 ? 1.0 : static_cast<double>(i) / u;
  };

  LayoutMetrics out;
  out.iou_fg_percent = 100.0 * iou(inter_fg, union_fg);
  out.iou_bg_percent = 100.0 * iou(inter_bg, union_bg);
  out.miou_percent = 0.5 * (out.iou_fg_percent + out.iou_bg_percent);
  out.map_percent = 100.0 * detail::average_precision(pred, gt);
  return out;
}

}  // namespace crossview
