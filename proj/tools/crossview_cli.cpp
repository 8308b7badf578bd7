// Command-line front end for the cross-view toolkit. Each subcommand loads
// its inputs (8-bit PNG images, 16-bit PNG depth at value/256 meters,
// 12-value pose lines, JSON calibration), runs one pipeline, and emits a
// CSV or JSON report. All inputs are read and validated before any output
// file is created, and numeric output is fixed at 6 significant digits so
// identical invocations produce byte-identical reports.
//
// Exit codes: 0 success, 1 validation or computation error, 2 I/O error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crossview/bev.hpp"
#include "crossview/cct.hpp"
#include "crossview/config.hpp"
#include "crossview/depth_loss.hpp"
#include "crossview/gradcheck.hpp"
#include "crossview/image.hpp"
#include "crossview/io.hpp"
#include "crossview/layout_loss.hpp"
#include "crossview/metrics.hpp"
#include "crossview/numeric.hpp"
#include "crossview/synth.hpp"
#include "crossview/types.hpp"
#include "crossview/viz.hpp"
#include "crossview/warp.hpp"

namespace {

using namespace crossview;

// Writes the report to the path (JSON when it ends in .json, CSV otherwise)
// or to stdout when no path was given.
void emit_report(const Report& report, const std::string& path) {
  if (path.empty()) {
    std::cout << report.csv();
    return;
  }
  const bool json =
      path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  if (json)
    report.write_json(path);
  else
    report.write_csv(path);
}

// Depth PNGs mark missing pixels with 0, which DepthMap rejects. Fill the
// holes with a positive placeholder; callers must carry the valid mask.
DepthMap to_depth_map(const DepthImage& img) {
  Grid<double> d = img.depth;
  for (int r = 0; r < d.rows(); ++r)
    for (int c = 0; c < d.cols(); ++c)
      if (!img.valid(r, c)) d(r, c) = 1.0;
  return DepthMap(std::move(d));
}

Mask intersect(const Mask& a, const Mask& b) {
  if (!a.same_shape(b)) throw ShapeMismatch("masks differ in shape");
  Mask out(a.rows(), a.cols(), 0);
  for (std::size_t i = 0; i < a.data().size(); ++i)
    out.data()[i] = a.data()[i] && b.data()[i];
  return out;
}

double mean_abs(const Grid3<double>& g) {
  ExactSum acc;
  for (double v : g.data()) acc.add(std::fabs(v));
  return g.data().empty() ? 0.0 : acc.result() / g.data().size();
}

// Calibration with the gaps filled: a missing BEV block falls back to the
// defaults, a missing camera mounting to a level camera at the BEV height
// (tilted down by pitch), a missing BEV placement to the canonical grid.
struct FieldSetup {
  BevSpec bev;
  CameraIntrinsics k;
  Se3Pose t_ego_cam;
  Se3Pose t_bev_ego;
};

FieldSetup field_setup(const Calibration& calib, double pitch) {
  FieldSetup s;
  s.k = calib.intrinsics;
  s.bev = calib.bev.value_or(BevSpec{});
  s.t_ego_cam = calib.t_ego_cam
                    ? *calib.t_ego_cam
                    : level_t_ego_cam(s.bev.camera_height, pitch);
  s.t_bev_ego =
      calib.t_bev_ego ? *calib.t_bev_ego : canonical_t_bev_ego(s.bev);
  return s;
}

// ---------------------------------------------------------------------------
// Subcommand handlers. Each loads everything first, computes, then writes.

struct ProjectFieldArgs {
  std::string calib, road, out_depth, report, viz;
  double pitch = 0.0;
};

void run_project_field(const ProjectFieldArgs& a) {
  const Calibration calib = load_calibration(a.calib);
  std::optional<Mask> road;
  if (!a.road.empty()) road = load_binary_mask(a.road);
  const FieldSetup s = field_setup(calib, a.pitch);
  const DistanceField field = project_distance_field(
      s.bev, s.k, s.t_ego_cam, s.t_bev_ego, road, s.k.height, s.k.width);

  std::size_t covered = 0;
  double lo = 0.0, hi = 0.0;
  for (int r = 0; r < field.fv_mask.rows(); ++r)
    for (int c = 0; c < field.fv_mask.cols(); ++c) {
      if (!field.fv_mask(r, c)) continue;
      const double z = field.fv_z(r, c);
      if (covered == 0) {
        lo = hi = z;
      } else {
        lo = std::min(lo, z);
        hi = std::max(hi, z);
      }
      ++covered;
    }
  if (covered == 0)
    throw NoValidPixels("project-field: no pixel sees the ground plane");

  Report report;
  report.add("valid_fraction",
             static_cast<double>(covered) / field.fv_z.data().size());
  report.add("min_depth_m", lo);
  report.add("max_depth_m", hi);

  if (!a.out_depth.empty()) save_depth(a.out_depth, field.fv_z, &field.fv_mask);
  if (!a.viz.empty()) save_image(a.viz, heatmap(field.fv_z, &field.fv_mask));
  emit_report(report, a.report);
}

struct WarpArgs {
  std::string image, depth, pose, calib, out, out_mask, report;
  int frame = 0;
};

void run_warp(const WarpArgs& a) {
  const ImagePlane src = load_image(a.image);
  const DepthImage depth_img = load_depth(a.depth);
  const Calibration calib = load_calibration(a.calib);
  const std::vector<Se3Pose> poses = load_poses(a.pose);
  if (a.frame < 0 || a.frame >= static_cast<int>(poses.size()))
    throw Error("warp: --frame is out of range");

  WarpResult warped =
      warp_image(src, to_depth_map(depth_img), poses[a.frame], calib.intrinsics);
  // Pixels without measured depth have no geometry to warp through.
  for (int r = 0; r < warped.valid.rows(); ++r)
    for (int c = 0; c < warped.valid.cols(); ++c)
      if (!depth_img.valid(r, c)) {
        warped.valid(r, c) = 0;
        for (int k = 0; k < warped.image.channels(); ++k)
          warped.image(r, c, k) = 0.0;
      }

  std::size_t valid = 0;
  for (std::uint8_t v : warped.valid.data()) valid += v;
  Report report;
  report.add("valid_fraction",
             static_cast<double>(valid) / warped.valid.data().size());

  save_image(a.out, warped.image);
  if (!a.out_mask.empty()) save_binary_mask(a.out_mask, warped.valid);
  emit_report(report, a.report);
}

struct LossesArgs {
  std::string target, recon, depth, pred_road, gt_road, pred_vehicle,
      gt_vehicle, config, report;
};

void run_losses(const LossesArgs& a) {
  ToolkitConfig cfg;
  if (!a.config.empty())
    cfg = config_from_json(detail::parse_json_file(a.config));

  Report report;
  bool any = false;

  std::optional<ImagePlane> target;
  if (!a.target.empty()) target = load_image(a.target);
  if (!a.recon.empty()) {
    if (!target) throw Error("losses: --recon needs --target");
    const ImagePlane recon = load_image(a.recon);
    const Grid<double> err = photometric_error(*target, recon, cfg.depth_pose);
    ExactSum acc;
    for (double e : err.data()) acc.add(e);
    report.add("photometric", acc.result() / err.data().size());
    any = true;
  }
  if (!a.depth.empty()) {
    if (!target) throw Error("losses: --depth needs --target");
    const DepthImage d = load_depth(a.depth);
    for (std::uint8_t v : d.valid.data())
      if (!v) throw Error("losses: smoothness needs a dense depth map");
    report.add("smoothness", smoothness_loss(DepthMap(d.depth), *target));
    any = true;
  }

  const auto category = [&](const std::string& pred_path,
                            const std::string& gt_path,
                            LayoutCategory cat) -> std::optional<double> {
    if (pred_path.empty() != gt_path.empty())
      throw Error("losses: prediction and ground truth come in pairs");
    if (pred_path.empty()) return std::nullopt;
    const LayoutGrid layout(load_probability(pred_path),
                            load_binary_mask(gt_path), cat);
    const HybridLossResult h = hybrid_loss(layout, cfg.layout);
    const std::string p = std::string(to_string(cat)) + "_";
    report.add(p + "wbce", h.wbce);
    report.add(p + "soft_iou", h.soft_iou);
    report.add(p + "boundary", h.boundary);
    report.add(p + "hybrid", h.value);
    any = true;
    return h.value;
  };
  const auto road = category(a.pred_road, a.gt_road, LayoutCategory::road);
  const auto vehicle =
      category(a.pred_vehicle, a.gt_vehicle, LayoutCategory::vehicle);
  if (road && vehicle) report.add("layout_total", *road + *vehicle);

  if (!any) throw Error("losses: no inputs given");
  emit_report(report, a.report);
}

struct CctArgs {
  std::string forward, bev, forward_re, depth_feat, weights, out, out_cv,
      out_cm, report;
};

void run_cct(const CctArgs& a) {
  const FeatureMap f_f = load_feature_map(a.forward);
  const FeatureMap f_b = load_feature_map(a.bev);
  const FeatureMap f_f_re = load_feature_map(a.forward_re);
  const FeatureMap f_d = load_feature_map(a.depth_feat);
  const CctWeights w = load_cct_weights(a.weights);

  const FeatureMap f_cv = cct_cv(f_f, f_b, f_f_re, w);
  const FeatureMap f_cm = cct_cm(f_b, f_f, f_d);
  const FeatureMap fused = cct_fuse(f_f, f_cv, f_cm);

  Report report;
  report.add("locations", fused.locations());
  report.add("channels", fused.channels());
  report.add("cv_mean_abs", mean_abs(f_cv.values));
  report.add("cm_mean_abs", mean_abs(f_cm.values));
  report.add("fused_mean_abs", mean_abs(fused.values));

  save_feature_map(a.out, fused);
  if (!a.out_cv.empty()) save_feature_map(a.out_cv, f_cv);
  if (!a.out_cm.empty()) save_feature_map(a.out_cm, f_cm);
  emit_report(report, a.report);
}

struct EvalDepthArgs {
  std::string pred, gt, mask, report;
  bool no_scaling = false;
  double min_depth = 1e-3;
  double max_depth = 80.0;
};

void run_eval_depth(const EvalDepthArgs& a) {
  const DepthImage pred = load_depth(a.pred);
  const DepthImage gt = load_depth(a.gt);
  Mask valid = intersect(pred.valid, gt.valid);
  if (!a.mask.empty()) valid = intersect(valid, load_binary_mask(a.mask));

  DepthEvalConfig cfg;
  cfg.min_depth = a.min_depth;
  cfg.max_depth = a.max_depth;
  cfg.apply_median_scaling = !a.no_scaling;
  const DepthMetrics m =
      depth_metrics(to_depth_map(pred), to_depth_map(gt), valid, cfg);

  Report report;
  report.add("abs_rel", m.abs_rel);
  report.add("sq_rel", m.sq_rel);
  report.add("rmse", m.rmse);
  report.add("rmse_log", m.rmse_log);
  report.add("scale_factor", m.scale_factor);
  report.add("valid_count", static_cast<double>(m.valid_count));
  emit_report(report, a.report);
}

struct EvalOdometryArgs {
  std::string pred, gt, report;
  int step = 10;
};

void run_eval_odometry(const EvalOdometryArgs& a) {
  const Trajectory pred = load_trajectory(a.pred);
  const Trajectory gt = load_trajectory(a.gt);
  const OdometryDrift d = odometry_drift(pred, gt, a.step);

  Report report;
  report.add("t_err_percent", d.t_err_percent);
  report.add("r_err_deg_per_100m", d.r_err_deg_per_100m);
  report.add("segments", static_cast<double>(d.segments));
  emit_report(report, a.report);
}

struct EvalLayoutArgs {
  std::string pred, gt, report, viz_overlay, viz_sdf;
};

void run_eval_layout(const EvalLayoutArgs& a) {
  const Grid<double> pred = load_probability(a.pred);
  const Mask gt = load_binary_mask(a.gt);
  const LayoutMetrics m = layout_metrics(pred, gt);

  Report report;
  report.add("iou_fg_percent", m.iou_fg_percent);
  report.add("iou_bg_percent", m.iou_bg_percent);
  report.add("miou_percent", m.miou_percent);
  report.add("map_percent", m.map_percent);

  if (!a.viz_overlay.empty())
    save_image(a.viz_overlay, layout_overlay(pred, gt));
  if (!a.viz_sdf.empty()) save_image(a.viz_sdf, sdf_image(signed_distance(gt)));
  emit_report(report, a.report);
}

struct FitScaleArgs {
  std::string depth, field, report;
};

void run_fit_scale(const FitScaleArgs& a) {
  const DepthImage depth = load_depth(a.depth);
  const DepthImage field_img = load_depth(a.field);

  DistanceField field;
  field.fv_z = field_img.depth;
  field.fv_mask = intersect(field_img.valid, depth.valid);
  const FitScaleResult fit = fit_scale(to_depth_map(depth), field);

  std::size_t overlap = 0;
  for (std::uint8_t v : field.fv_mask.data()) overlap += v;
  Report report;
  report.add("scale", fit.scale);
  report.add("residual", fit.objective);
  report.add("valid_count", static_cast<double>(overlap));
  emit_report(report, a.report);
}

struct SynthDemoArgs {
  std::string report, out_image, out_depth;
  double scale = 1.0;
  double noise = 0.0;
  std::uint64_t seed = 7;
  std::uint64_t noise_seed = 1234;
};

void run_synth_demo(const SynthDemoArgs& a) {
  const SyntheticScene scene = make_default_scene(a.seed);
  const ScaleRecoveryResult r =
      scale_recovery_experiment(scene, a.scale, a.noise, a.noise_seed);

  Report report;
  report.add("true_scale", r.true_scale);
  report.add("recovered_scale", r.recovered_scale);
  report.add("scale_rel_error",
             std::fabs(r.recovered_scale / r.true_scale - 1.0));
  report.add("cgt_residual", r.cgt_residual);
  report.add("abs_rel", r.depth.abs_rel);
  report.add("rmse", r.depth.rmse);
  report.add("valid_count", static_cast<double>(r.depth.valid_count));

  if (!a.out_image.empty() || !a.out_depth.empty()) {
    const RenderedFrame frame = render_scene(scene, 0);
    if (!a.out_image.empty()) save_image(a.out_image, frame.image);
    if (!a.out_depth.empty())
      save_depth(a.out_depth, frame.depth, &frame.valid);
  }
  emit_report(report, a.report);
}

struct GradcheckArgs {
  std::string report;
};

void run_gradcheck(const GradcheckArgs& a, int& status) {
  const std::vector<NamedGradCheck> suite = standard_gradient_suite();

  Report report;
  bool all_pass = true;
  for (const NamedGradCheck& check : suite) {
    std::printf("%-28s %12.3e  %s\n", check.name.c_str(),
                check.report.max_rel_error,
                check.report.pass ? "pass" : "FAIL");
    report.add(check.name, check.report.max_rel_error);
    all_pass = all_pass && check.report.pass;
  }
  std::printf("%zu/%zu gradient checks passed\n",
              static_cast<std::size_t>(
                  std::count_if(suite.begin(), suite.end(),
                                [](const NamedGradCheck& c) {
                                  return c.report.pass;
                                })),
              suite.size());
  if (!a.report.empty()) emit_report(report, a.report);
  if (!all_pass) status = 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cross-view depth, odometry, and BEV layout toolkit"};
  app.require_subcommand(1);
  int status = 0;

  ProjectFieldArgs pf;
  auto* pf_cmd = app.add_subcommand(
      "project-field", "Project the BEV distance field into the front view");
  pf_cmd->add_option("--calib", pf.calib, "calibration JSON")->required();
  pf_cmd->add_option("--road", pf.road, "BEV road mask PNG");
  pf_cmd->add_option("--pitch", pf.pitch,
                     "camera pitch in radians, used when the calibration "
                     "lacks t_ego_cam");
  pf_cmd->add_option("--out-depth", pf.out_depth,
                     "projected field as a 16-bit depth PNG");
  pf_cmd->add_option("--viz", pf.viz, "field heatmap PNG");
  pf_cmd->add_option("--report", pf.report, "report path (.json or CSV)");
  pf_cmd->callback([&] { run_project_field(pf); });

  WarpArgs wa;
  auto* warp_cmd = app.add_subcommand(
      "warp", "Warp a source image into the target view via its depth");
  warp_cmd->add_option("--image", wa.image, "source image PNG")->required();
  warp_cmd->add_option("--depth", wa.depth, "target depth PNG")->required();
  warp_cmd->add_option("--pose", wa.pose, "target-to-source pose file")
      ->required();
  warp_cmd->add_option("--frame", wa.frame, "line of the pose file to use");
  warp_cmd->add_option("--calib", wa.calib, "calibration JSON")->required();
  warp_cmd->add_option("--out", wa.out, "warped image PNG")->required();
  warp_cmd->add_option("--out-mask", wa.out_mask, "validity mask PNG");
  warp_cmd->add_option("--report", wa.report, "report path (.json or CSV)");
  warp_cmd->callback([&] { run_warp(wa); });

  LossesArgs la;
  auto* loss_cmd = app.add_subcommand(
      "losses", "Evaluate photometric, smoothness, and layout losses");
  loss_cmd->add_option("--target", la.target, "target image PNG");
  loss_cmd->add_option("--recon", la.recon, "reconstructed image PNG");
  loss_cmd->add_option("--depth", la.depth, "dense depth PNG for smoothness");
  loss_cmd->add_option("--pred-road", la.pred_road, "road probability PNG");
  loss_cmd->add_option("--gt-road", la.gt_road, "road ground-truth mask PNG");
  loss_cmd->add_option("--pred-vehicle", la.pred_vehicle,
                       "vehicle probability PNG");
  loss_cmd->add_option("--gt-vehicle", la.gt_vehicle,
                       "vehicle ground-truth mask PNG");
  loss_cmd->add_option("--config", la.config, "loss configuration JSON");
  loss_cmd->add_option("--report", la.report, "report path (.json or CSV)");
  loss_cmd->callback([&] { run_losses(la); });

  CctArgs ca;
  auto* cct_cmd = app.add_subcommand(
      "cct", "Run the cross-view and cross-modal attention fusion");
  cct_cmd->add_option("--forward", ca.forward, "front-view feature map")
      ->required();
  cct_cmd->add_option("--bev", ca.bev, "BEV feature map")->required();
  cct_cmd->add_option("--forward-re", ca.forward_re,
                      "retransformed front-view feature map")
      ->required();
  cct_cmd->add_option("--depth-feat", ca.depth_feat,
                      "depth decoder feature map")
      ->required();
  cct_cmd->add_option("--weights", ca.weights, "fusion weights file")
      ->required();
  cct_cmd->add_option("--out", ca.out, "fused feature map")->required();
  cct_cmd->add_option("--out-cv", ca.out_cv, "cross-view branch output");
  cct_cmd->add_option("--out-cm", ca.out_cm, "cross-modal branch output");
  cct_cmd->add_option("--report", ca.report, "report path (.json or CSV)");
  cct_cmd->callback([&] { run_cct(ca); });

  EvalDepthArgs da;
  auto* depth_cmd =
      app.add_subcommand("eval-depth", "Depth error metrics against a "
                                       "ground-truth depth map");
  depth_cmd->add_option("--pred", da.pred, "predicted depth PNG")->required();
  depth_cmd->add_option("--gt", da.gt, "ground-truth depth PNG")->required();
  depth_cmd->add_option("--mask", da.mask, "extra evaluation mask PNG");
  depth_cmd->add_flag("--no-scaling", da.no_scaling,
                      "skip median scale alignment");
  depth_cmd->add_option("--min-depth", da.min_depth, "evaluation floor, m");
  depth_cmd->add_option("--max-depth", da.max_depth, "evaluation cap, m");
  depth_cmd->add_option("--report", da.report, "report path (.json or CSV)");
  depth_cmd->callback([&] { run_eval_depth(da); });

  EvalOdometryArgs oa;
  auto* odo_cmd = app.add_subcommand(
      "eval-odometry", "Translational and rotational drift over 100..800 m");
  odo_cmd->add_option("--pred", oa.pred, "predicted trajectory")->required();
  odo_cmd->add_option("--gt", oa.gt, "ground-truth trajectory")->required();
  odo_cmd->add_option("--step", oa.step, "start-frame stride");
  odo_cmd->add_option("--report", oa.report, "report path (.json or CSV)");
  odo_cmd->callback([&] { run_eval_odometry(oa); });

  EvalLayoutArgs ya;
  auto* layout_cmd = app.add_subcommand(
      "eval-layout", "IoU and average precision of a BEV layout channel");
  layout_cmd->add_option("--pred", ya.pred, "probability PNG")->required();
  layout_cmd->add_option("--gt", ya.gt, "ground-truth mask PNG")->required();
  layout_cmd->add_option("--viz-overlay", ya.viz_overlay,
                         "prediction/ground-truth overlay PNG");
  layout_cmd->add_option("--viz-sdf", ya.viz_sdf,
                         "signed distance field PNG");
  layout_cmd->add_option("--report", ya.report, "report path (.json or CSV)");
  layout_cmd->callback([&] { run_eval_layout(ya); });

  FitScaleArgs fa;
  auto* fit_cmd = app.add_subcommand(
      "fit-scale", "Recover the metric scale of a depth map against a "
                   "projected distance field");
  fit_cmd->add_option("--depth", fa.depth, "unscaled depth PNG")->required();
  fit_cmd->add_option("--field", fa.field,
                      "projected field PNG (from project-field)")
      ->required();
  fit_cmd->add_option("--report", fa.report, "report path (.json or CSV)");
  fit_cmd->callback([&] { run_fit_scale(fa); });

  SynthDemoArgs sa;
  auto* synth_cmd = app.add_subcommand(
      "synth-demo", "End-to-end scale recovery on the synthetic scene");
  synth_cmd->add_option("--scale", sa.scale, "true scale to recover")
      ->required();
  synth_cmd->add_option("--noise", sa.noise,
                        "multiplicative depth noise amplitude");
  synth_cmd->add_option("--seed", sa.seed, "scene texture seed");
  synth_cmd->add_option("--noise-seed", sa.noise_seed, "noise seed");
  synth_cmd->add_option("--out-image", sa.out_image, "rendered frame PNG");
  synth_cmd->add_option("--out-depth", sa.out_depth, "rendered depth PNG");
  synth_cmd->add_option("--out,--report", sa.report,
                        "report path (.json or CSV)");
  synth_cmd->callback([&] { run_synth_demo(sa); });

  GradcheckArgs ga;
  auto* grad_cmd = app.add_subcommand(
      "gradcheck", "Finite-difference checks of every analytic gradient");
  grad_cmd->add_option("--report", ga.report, "report path (.json or CSV)");
  grad_cmd->callback([&] { run_gradcheck(ga, status); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return status;
}
