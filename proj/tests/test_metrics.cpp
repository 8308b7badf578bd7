#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <gtest/gtest.h>
#include <random>
#include <vector>

#include "crossview/metrics.hpp"

namespace crossview {
namespace {

DepthMap depth_from(std::vector<double> v, int h, int w) {
  Grid<double> d(h, w);
  std::copy(v.begin(), v.end(), d.data().begin());
  return DepthMap(std::move(d));
}

TEST(DepthMetricsTest, IdenticalPredictionHasZeroError) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> dist(1.0, 60.0);
  Grid<double> g(6, 6);
  for (double& v : g.data()) v = dist(rng);
  const DepthMap gt(std::move(g));
  const DepthMetrics m = depth_metrics(gt, gt, Mask(6, 6, 1), DepthEvalConfig{});
  EXPECT_DOUBLE_EQ(m.scale_factor, 1.0);
  EXPECT_DOUBLE_EQ(m.abs_rel, 0.0);
  EXPECT_DOUBLE_EQ(m.sq_rel, 0.0);
  EXPECT_DOUBLE_EQ(m.rmse, 0.0);
  EXPECT_DOUBLE_EQ(m.rmse_log, 0.0);
  EXPECT_EQ(m.valid_count, 36u);
}

TEST(DepthMetricsTest, HalfScalePredictionExactValues) {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> dist(2.0, 70.0);
  Grid<double> g(5, 7);
  for (double& v : g.data()) v = dist(rng);
  Grid<double> p(5, 7);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 7; ++c) p(r, c) = g(r, c) / 2.0;
  const DepthMap gt(std::move(g));
  const DepthMap pred(std::move(p));

  DepthEvalConfig unscaled;
  unscaled.apply_median_scaling = false;
  const DepthMetrics raw = depth_metrics(pred, gt, Mask(5, 7, 1), unscaled);
  EXPECT_DOUBLE_EQ(raw.scale_factor, 2.0);
  EXPECT_DOUBLE_EQ(raw.abs_rel, 0.5);

  const DepthMetrics scaled =
      depth_metrics(pred, gt, Mask(5, 7, 1), DepthEvalConfig{});
  EXPECT_DOUBLE_EQ(scaled.scale_factor, 2.0);
  EXPECT_DOUBLE_EQ(scaled.abs_rel, 0.0);
  EXPECT_DOUBLE_EQ(scaled.rmse, 0.0);
  EXPECT_DOUBLE_EQ(scaled.rmse_log, 0.0);
}

TEST(DepthMetricsTest, MedianScalingRemovesAnyGlobalScale) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> dist(1.0, 50.0);
  Grid<double> g(4, 4);
  for (double& v : g.data()) v = dist(rng);
  const DepthMap gt(std::move(g));
  for (double s : {0.5, 3.0, 30.0, 42.0}) {
    Grid<double> p(4, 4);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) p(r, c) = gt(r, c) / s;
    const DepthMetrics m =
        depth_metrics(DepthMap(std::move(p)), gt, Mask(4, 4, 1), DepthEvalConfig{});
    EXPECT_NEAR(m.scale_factor, s, s * 1e-12);
    EXPECT_LT(m.abs_rel, 1e-12);
    EXPECT_LT(m.rmse, 1e-9);
  }
}

// Direct-formula evaluation with plain accumulation, including the median
// convention (midpoint of the two central order statistics when the count
// is even) and the clamp of scaled predictions to the depth range.
TEST(DepthMetricsTest, MatchesDirectFormulaWithClampsAndMask) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> gdist(0.5, 90.0);
  std::uniform_real_distribution<double> pdist(1e-4, 120.0);
  const int h = 6, w = 5;
  Grid<double> g(h, w), p(h, w);
  for (double& v : g.data()) v = gdist(rng);
  for (double& v : p.data()) v = pdist(rng);
  Mask mask(h, w, 1);
  mask(0, 0) = 0;
  mask(3, 2) = 0;
  const DepthMap gt(std::move(g));
  const DepthMap pred(std::move(p));

  DepthEvalConfig cfg;
  cfg.apply_median_scaling = true;
  const DepthMetrics got = depth_metrics(pred, gt, mask, cfg);

  std::vector<double> pv, gv;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      if (!mask(r, c)) continue;
      if (gt(r, c) < cfg.min_depth || gt(r, c) > cfg.max_depth) continue;
      pv.push_back(pred(r, c));
      gv.push_back(gt(r, c));
    }
  ASSERT_EQ(got.valid_count, gv.size());
  const auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  const double s = median(gv) / median(pv);
  EXPECT_NEAR(got.scale_factor, s, 1e-12);

  double abs_rel = 0.0, sq_rel = 0.0, sq = 0.0, sq_log = 0.0;
  for (std::size_t i = 0; i < gv.size(); ++i) {
    const double pc = std::clamp(s * pv[i], cfg.min_depth, cfg.max_depth);
    abs_rel += std::fabs(gv[i] - pc) / gv[i];
    sq_rel += (gv[i] - pc) * (gv[i] - pc) / gv[i];
    sq += (gv[i] - pc) * (gv[i] - pc);
    sq_log += std::pow(std::log(gv[i]) - std::log(pc), 2);
  }
  const double n = static_cast<double>(gv.size());
  EXPECT_NEAR(got.abs_rel, abs_rel / n, 1e-12);
  EXPECT_NEAR(got.sq_rel, sq_rel / n, 1e-9);
  EXPECT_NEAR(got.rmse, std::sqrt(sq / n), 1e-9);
  EXPECT_NEAR(got.rmse_log, std::sqrt(sq_log / n), 1e-12);
}

TEST(DepthMetricsTest, OutOfRangeGtPixelsAreExcluded) {
  // gt of 90 m exceeds the 80 m cap, so only one pixel remains.
  const DepthMap gt = depth_from({90.0, 10.0}, 1, 2);
  const DepthMap pred = depth_from({1.0, 5.0}, 1, 2);
  const DepthMetrics m = depth_metrics(pred, gt, Mask(1, 2, 1), DepthEvalConfig{});
  EXPECT_EQ(m.valid_count, 1u);
  EXPECT_DOUBLE_EQ(m.scale_factor, 2.0);
}

TEST(DepthMetricsTest, ThrowsWithoutValidPixels) {
  EXPECT_THROW(
      depth_metrics(DepthMap(2, 2, 1.0), DepthMap(2, 2, 1.0), Mask(2, 2, 0),
                    DepthEvalConfig{}),
      NoValidPixels);
}

TEST(ScaleFactorStatsTest, MeanAndPopulationDeviation) {
  const ScaleFactorStats s = scale_factor_stats({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.stddev, std::sqrt(1.25));
  EXPECT_THROW(scale_factor_stats({}), NoValidPixels);
}

Trajectory straight_line(int frames, double spacing, double scale = 1.0) {
  Trajectory t;
  t.poses.reserve(frames);
  for (int i = 0; i < frames; ++i)
    t.poses.emplace_back(Eigen::Matrix3d::Identity(),
                         Eigen::Vector3d(0.0, 0.0, scale * spacing * i));
  return t;
}

TEST(OdometryDrift, IdenticalTrajectoriesScoreZero) {
  const Trajectory gt = straight_line(2000, 0.1);
  const OdometryDrift d = odometry_drift(gt, gt);
  EXPECT_GT(d.segments, 0u);
  EXPECT_EQ(d.t_err_percent, 0.0);
  EXPECT_EQ(d.r_err_deg_per_100m, 0.0);
}

TEST(OdometryDrift, OnePercentScaleOnStraightLine) {
  // 900 m ground-truth path at 0.1 m per frame; the prediction inflates
  // every translation by 1%. Pure-translation segments keep rotations
  // exactly at identity.
  const Trajectory gt = straight_line(9001, 0.1);
  const Trajectory pred = straight_line(9001, 0.1, 1.01);
  const OdometryDrift d = odometry_drift(pred, gt);
  EXPECT_GT(d.segments, 100u);
  EXPECT_NEAR(d.t_err_percent, 1.0, 0.002);
  EXPECT_EQ(d.r_err_deg_per_100m, 0.0);
}

TEST(OdometryDrift, GlobalRigidOffsetCancelsInRelativeErrors) {
  const Trajectory gt = straight_line(2500, 0.1);
  const Se3Pose g(rot_z(0.7) * rot_x(-0.3), Eigen::Vector3d(5.0, -2.0, 11.0));
  Trajectory moved;
  moved.poses.reserve(gt.poses.size());
  for (const Se3Pose& p : gt.poses) moved.poses.push_back(g * p);
  const OdometryDrift d = odometry_drift(moved, gt);
  EXPECT_LT(d.t_err_percent, 1e-9);
  EXPECT_LT(d.r_err_deg_per_100m, 1e-9);
}

TEST(OdometryDrift, DriftInvariantUnderRigidTransformOfBothInputs) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> jitter(-0.02, 0.02);
  // Spacing chosen so no accumulated distance lands on a segment-length
  // boundary, where rounding could flip the chosen end frame.
  Trajectory gt = straight_line(3000, 0.1037);
  Trajectory pred = gt;
  for (std::size_t i = 0; i < pred.poses.size(); ++i)
    pred.poses[i] = Se3Pose(
        pred.poses[i].rotation(),
        pred.poses[i].translation() +
            Eigen::Vector3d(jitter(rng), jitter(rng), jitter(rng)));
  const OdometryDrift base = odometry_drift(pred, gt);

  const Se3Pose g(rot_y(1.2), Eigen::Vector3d(-3.0, 8.0, 0.5));
  Trajectory pred_moved, gt_moved;
  for (const Se3Pose& p : pred.poses) pred_moved.poses.push_back(g * p);
  for (const Se3Pose& p : gt.poses) gt_moved.poses.push_back(g * p);
  const OdometryDrift moved = odometry_drift(pred_moved, gt_moved);
  EXPECT_NEAR(moved.t_err_percent, base.t_err_percent, 1e-9);
  EXPECT_NEAR(moved.r_err_deg_per_100m, base.r_err_deg_per_100m, 1e-9);
}

TEST(OdometryDrift, ThrowsWhenNoSegmentFits) {
  const Trajectory gt = straight_line(50, 0.1);  // 4.9 m path
  EXPECT_THROW(odometry_drift(gt, gt), TrajectoryTooShort);
}

TEST(OdometryDrift, RejectsLengthMismatch) {
  const Trajectory a = straight_line(1200, 0.1);
  const Trajectory b = straight_line(1201, 0.1);
  EXPECT_THROW(odometry_drift(a, b), ShapeMismatch);
}

// Average precision oracle that enumerates every distinct score as a
// threshold, forms the precision-recall points with ties absorbed, applies
// the recall-monotone envelope, and integrates trapezoidally with a flat
// segment back to recall zero.
double ap_by_enumeration(const Grid<double>& pred, const Mask& gt) {
  std::size_t positives = 0;
  for (auto v : gt.data()) positives += v;
  if (positives == 0) return 1.0;

  std::vector<double> thresholds(pred.data().begin(), pred.data().end());
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  std::vector<double> recall, precision;
  for (double t : thresholds) {
    std::size_t tp = 0, fp = 0;
    for (int r = 0; r < pred.rows(); ++r)
      for (int c = 0; c < pred.cols(); ++c) {
        if (pred(r, c) < t) continue;
        (gt(r, c) ? tp : fp) += 1;
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

TEST(LayoutMetricsTest, PerfectBinaryPrediction) {
  std::mt19937 rng(6);
  Mask gt(4, 4, 0);
  for (auto& v : gt.data()) v = rng() % 2;
  gt(0, 0) = 1;
  Grid<double> pred(4, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) pred(r, c) = gt(r, c);
  const LayoutMetrics m = layout_metrics(pred, gt);
  EXPECT_DOUBLE_EQ(m.iou_fg_percent, 100.0);
  EXPECT_DOUBLE_EQ(m.iou_bg_percent, 100.0);
  EXPECT_DOUBLE_EQ(m.miou_percent, 100.0);
  EXPECT_DOUBLE_EQ(m.map_percent, 100.0);
}

TEST(LayoutMetricsTest, ComplementPredictionZerosForegroundIou) {
  Mask gt(3, 3, 0);
  gt(1, 1) = 1;
  Grid<double> pred(3, 3, 1.0);
  pred(1, 1) = 0.0;
  const LayoutMetrics m = layout_metrics(pred, gt);
  EXPECT_DOUBLE_EQ(m.iou_fg_percent, 0.0);
  EXPECT_DOUBLE_EQ(m.iou_bg_percent, 0.0);
}

TEST(LayoutMetricsTest, HandCountedIou) {
  // 2x2: gt fg = {(0,0), (0,1)}, pred fg = {(0,1), (1,0)}.
  Mask gt(2, 2, 0);
  gt(0, 0) = 1;
  gt(0, 1) = 1;
  Grid<double> pred(2, 2, 0.0);
  pred(0, 1) = 0.9;
  pred(1, 0) = 0.8;
  const LayoutMetrics m = layout_metrics(pred, gt);
  EXPECT_DOUBLE_EQ(m.iou_fg_percent, 100.0 / 3.0);  // 1 of 3
  EXPECT_DOUBLE_EQ(m.iou_bg_percent, 100.0 / 3.0);  // 1 of 3
  EXPECT_DOUBLE_EQ(m.miou_percent, 100.0 / 3.0);
}

TEST(LayoutMetricsTest, ApEqualsExhaustiveEnumerationExactly) {
  std::mt19937 rng(7);
  // Scores drawn from a small set so threshold ties actually occur.
  const double levels[] = {0.1, 0.3, 0.3, 0.5, 0.7, 0.9};
  for (int trial = 0; trial < 100; ++trial) {
    Mask gt(4, 4, 0);
    for (auto& v : gt.data()) v = rng() % 2;
    Grid<double> pred(4, 4);
    for (double& v : pred.data()) v = levels[rng() % 6];
    const LayoutMetrics m = layout_metrics(pred, gt);
    EXPECT_EQ(m.map_percent, 100.0 * ap_by_enumeration(pred, gt))
        << "trial " << trial;
  }
}

TEST(LayoutMetricsTest, HandBuiltScoreCase) {
  // Scores ranked so the top two hits are positives, then one miss, then
  // the final positive: PR points (1/3,1), (2/3,1), (2/3,2/3), (1,3/4).
  Mask gt(2, 2, 0);
  gt(0, 0) = 1;
  gt(0, 1) = 1;
  gt(1, 1) = 1;
  Grid<double> pred(2, 2);
  pred(0, 0) = 0.9;
  pred(0, 1) = 0.8;
  pred(1, 0) = 0.6;
  pred(1, 1) = 0.4;
  const LayoutMetrics m = layout_metrics(pred, gt);
  // Envelope lifts the third point to 3/4; area = 2/3 + (1/3)*(3/4).
  EXPECT_NEAR(m.map_percent, 100.0 * (2.0 / 3.0 + 0.25), 1e-12);
}

TEST(LayoutMetricsTest, ApInvariantUnderMonotoneScoreTransform) {
  std::mt19937 rng(8);
  Mask gt(4, 4, 0);
  for (auto& v : gt.data()) v = rng() % 2;
  gt(2, 2) = 1;
  Grid<double> pred(4, 4);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (double& v : pred.data()) v = dist(rng);
  const double base = layout_metrics(pred, gt).map_percent;

  Grid<double> cubed(4, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) cubed(r, c) = std::pow(pred(r, c), 3);
  EXPECT_DOUBLE_EQ(layout_metrics(cubed, gt).map_percent, base);
}

TEST(LayoutMetricsTest, EmptyGroundTruthConventions) {
  // No positives: AP defined as 1; an all-negative prediction also makes
  // the foreground union empty, which counts as a perfect IoU.
  const LayoutMetrics m = layout_metrics(Grid<double>(3, 3, 0.0), Mask(3, 3, 0));
  EXPECT_DOUBLE_EQ(m.map_percent, 100.0);
  EXPECT_DOUBLE_EQ(m.iou_fg_percent, 100.0);
  EXPECT_DOUBLE_EQ(m.miou_percent, 100.0);
}

TEST(TrajectoryTest, ValidationRequiresTwoPoses) {
  Trajectory t;
  t.poses.emplace_back();
  EXPECT_THROW(t.validate(), TrajectoryTooShort);
  t.poses.emplace_back();
  t.validate();
}

}  // namespace
}  // namespace crossview
