#pragma once

// Central finite-difference harness. check_gradient compares an analytic
// gradient against symmetric differences coordinate by coordinate, and
// standard_gradient_suite packages seeded instances of every loss in the
// toolkit, shared by the unit tests and the CLI gradcheck command. Test
// inputs are sampled away from the kinks of the non-smooth terms
// (absolute values, clamps, per-pixel minima).

#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "crossview/cct.hpp"
#include "crossview/depth_loss.hpp"
#include "crossview/layout_loss.hpp"
#include "crossview/types.hpp"

namespace crossview {

struct GradReport {
  std::vector<double> rel_errors;  // one per parameter
  double max_rel_error = 0.0;
  bool pass = false;
};

inline GradReport check_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x0, const std::vector<double>& analytic,
    double step = 1e-5, double tol = 1e-4) {
  if (analytic.size() != x0.size())
    throw DimensionMismatch("check_gradient: gradient size differs from x0");
  GradReport report;
  report.rel_errors.resize(x0.size());
  std::vector<double> x = x0;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    x[i] = x0[i] + step;
    const double fp = f(x);
    x[i] = x0[i] - step;
    const double fm = f(x);
    x[i] = x0[i];
    if (!std::isfinite(fp) || !std::isfinite(fm) ||
        !std::isfinite(analytic[i]))
      throw NonFiniteValue("check_gradient: non-finite value encountered");
    const double numeric = (fp - fm) / (2.0 * step);
    const double denom =
        std::max({std::fabs(analytic[i]), std::fabs(numeric), 1e-8});
    report.rel_errors[i] = std::fabs(analytic[i] - numeric) / denom;
    report.max_rel_error = std::max(report.max_rel_error, report.rel_errors[i]);
  }
  report.pass = report.max_rel_error < tol;
  return report;
}

struct NamedGradCheck {
  std::string name;
  GradReport report;
};

namespace detail {

inline std::vector<double> flatten(const Grid<double>& g) {
  return {g.data().begin(), g.data().end()};
}
inline std::vector<double> flatten(const Grid3<double>& g) {
  return {g.data().begin(), g.data().end()};
}

inline Grid<double> to_grid(const std::vector<double>& x, int rows, int cols) {
  Grid<double> g(rows, cols);
  std::copy(x.begin(), x.end(), g.data().begin());
  return g;
}
inline Grid3<double> to_grid3(const std::vector<double>& x, int h, int w,
                              int d) {
  Grid3<double> g(h, w, d);
  std::copy(x.begin(), x.end(), g.data().begin());
  return g;
}

inline Grid<double> random_grid(std::mt19937_64& rng, int rows, int cols,
                                double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Grid<double> g(rows, cols);
  for (double& v : g.data()) v = dist(rng);
  return g;
}
inline Grid3<double> random_grid3(std::mt19937_64& rng, int h, int w, int d,
                                  double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Grid3<double> g(h, w, d);
  for (double& v : g.data()) v = dist(rng);
  return g;
}
inline Mask random_mask(std::mt19937_64& rng, int rows, int cols,
                        double p_fg) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Mask m(rows, cols, 0);
  for (auto& v : m.data()) v = dist(rng) < p_fg ? 1 : 0;
  return m;
}

}  // namespace detail

// Seeded gradient checks for every analytic gradient in the toolkit.
// Instances are 8x8 grids (2x2x3 features for the attention module); all
// pass at relative tolerance 1e-4.
inline std::vector<NamedGradCheck> standard_gradient_suite() {
  std::vector<NamedGradCheck> results;
  const int n = 8;
  const double kink_margin = 1e-3;  // at least 10 steps away from any kink

  // Photometric error (and its SSIM component) with respect to the
  // reconstruction, as the mean over pixels.
  {
    std::mt19937_64 rng(101);
    const ImagePlane target(detail::random_grid3(rng, n, n, 1, 0.2, 0.8));
    Grid3<double> recon_px = detail::random_grid3(rng, n, n, 1, 0.2, 0.8);
    for (std::size_t i = 0; i < recon_px.data().size(); ++i) {
      double& v = recon_px.data()[i];
      const double t = target.pixels().data()[i];
      if (std::fabs(v - t) < kink_margin)
        v = t + (v >= t ? kink_margin : -kink_margin);
    }
    const DepthPoseLossConfig cfg;
    const Grid<double> weight(n, n, 1.0 / (n * n));
    const auto photometric_mean = [&](const std::vector<double>& x) {
      const ImagePlane recon(detail::to_grid3(x, n, n, 1));
      const Grid<double> err = photometric_error(target, recon, cfg);
      ExactSum acc;
      for (double e : err.data()) acc.add(e);
      return acc.result() / (n * n);
    };
    const Grid3<double> grad =
        photometric_error_grad_recon(target, ImagePlane(recon_px), cfg, weight);
    results.push_back({"photometric/recon",
                       check_gradient(photometric_mean,
                                      detail::flatten(recon_px),
                                      detail::flatten(grad))});

    const auto ssim_mean = [&](const std::vector<double>& x) {
      const ImagePlane b(detail::to_grid3(x, n, n, 1));
      const Grid<double> s = ssim_map(target, b, cfg.ssim_c1, cfg.ssim_c2);
      ExactSum acc;
      for (double e : s.data()) acc.add(e);
      return acc.result() / (n * n);
    };
    const Grid3<double> sgrad = ssim_map_grad_b(
        target, ImagePlane(recon_px), cfg.ssim_c1, cfg.ssim_c2, weight);
    results.push_back({"ssim/b", check_gradient(ssim_mean,
                                                detail::flatten(recon_px),
                                                detail::flatten(sgrad))});
  }

  // Smoothness with respect to depth. Adjacent inverse depths must differ
  // enough that no forward difference changes sign under perturbation.
  {
    std::mt19937_64 rng(202);
    Grid<double> depth(n, n);
    std::uniform_real_distribution<double> dist(1.0, 5.0);
    for (int attempts = 0; attempts < 1000; ++attempts) {
      for (double& v : depth.data()) v = dist(rng);
      bool ok = true;
      for (int r = 0; r < n && ok; ++r)
        for (int c = 0; c < n && ok; ++c) {
          if (c + 1 < n &&
              std::fabs(1.0 / depth(r, c + 1) - 1.0 / depth(r, c)) <
                  kink_margin)
            ok = false;
          if (r + 1 < n &&
              std::fabs(1.0 / depth(r + 1, c) - 1.0 / depth(r, c)) <
                  kink_margin)
            ok = false;
        }
      if (ok) break;
    }
    const ImagePlane image(detail::random_grid3(rng, n, n, 1, 0.1, 0.9));
    const auto smooth = [&](const std::vector<double>& x) {
      return smoothness_loss(DepthMap(detail::to_grid(x, n, n)), image);
    };
    const Grid<double> grad =
        smoothness_loss_grad_depth(DepthMap(depth), image);
    results.push_back({"smoothness/depth",
                       check_gradient(smooth, detail::flatten(depth),
                                      detail::flatten(grad))});
  }

  // Distance-field residual with respect to depth, away from |z - d| = 0.
  {
    std::mt19937_64 rng(303);
    DistanceField field;
    field.bev_z = Grid<double>(1, 1, 0.0);
    field.fv_z = detail::random_grid(rng, n, n, 5.0, 40.0);
    field.fv_mask = detail::random_mask(rng, n, n, 0.7);
    field.fv_mask(0, 0) = 1;
    Grid<double> depth = detail::random_grid(rng, n, n, 5.0, 40.0);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c)
        if (std::fabs(field.fv_z(r, c) - depth(r, c)) < 10.0 * kink_margin)
          depth(r, c) = field.fv_z(r, c) + 10.0 * kink_margin;
    const auto cgt = [&](const std::vector<double>& x) {
      return cgt_loss(DepthMap(detail::to_grid(x, n, n)), field).value;
    };
    const Grid<double> grad = cgt_loss_grad_depth(DepthMap(depth), field);
    results.push_back({"cgt/depth", check_gradient(cgt, detail::flatten(depth),
                                                   detail::flatten(grad))});
  }

  // Layout losses with respect to the prediction.
  {
    std::mt19937_64 rng(404);
    const Grid<double> pred = detail::random_grid(rng, n, n, 0.1, 0.9);
    Mask gt = detail::random_mask(rng, n, n, 0.4);
    gt(0, 0) = 1;
    gt(n - 1, n - 1) = 0;
    LayoutLossConfig cfg;

    const auto make_layout = [&](const std::vector<double>& x) {
      return LayoutGrid(detail::to_grid(x, n, n), gt, LayoutCategory::road);
    };
    const LayoutGrid base = make_layout(detail::flatten(pred));

    const auto wbce = [&](const std::vector<double>& x) {
      return wbce_loss(make_layout(x), cfg.w_road);
    };
    results.push_back(
        {"wbce/pred",
         check_gradient(wbce, detail::flatten(pred),
                        detail::flatten(wbce_loss_grad_pred(base, cfg.w_road)))});

    const auto wbce_pos = [&](const std::vector<double>& x) {
      return wbce_loss(make_layout(x), cfg.w_road, true);
    };
    results.push_back(
        {"wbce_positive_only/pred",
         check_gradient(
             wbce_pos, detail::flatten(pred),
             detail::flatten(wbce_loss_grad_pred(base, cfg.w_road, true)))});

    for (UnionMode mode : {UnionMode::standard, UnionMode::paper_literal}) {
      LayoutLossConfig mode_cfg = cfg;
      mode_cfg.union_mode = mode;
      const auto iou = [&](const std::vector<double>& x) {
        return soft_iou_loss(make_layout(x), mode_cfg).value;
      };
      results.push_back(
          {mode == UnionMode::standard ? "soft_iou_standard/pred"
                                       : "soft_iou_paper_literal/pred",
           check_gradient(iou, detail::flatten(pred),
                          detail::flatten(
                              soft_iou_loss_grad_pred(base, mode_cfg)))});
    }

    const SdfMap sdf = signed_distance(gt);
    const auto boundary = [&](const std::vector<double>& x) {
      return boundary_loss(detail::to_grid(x, n, n), sdf);
    };
    results.push_back(
        {"boundary/pred",
         check_gradient(boundary, detail::flatten(pred),
                        detail::flatten(
                            boundary_loss_grad_pred(pred, sdf)))});

    const auto hybrid = [&](const std::vector<double>& x) {
      return hybrid_loss(make_layout(x), cfg).value;
    };
    results.push_back(
        {"hybrid/pred",
         check_gradient(hybrid, detail::flatten(pred),
                        detail::flatten(hybrid_loss_grad_pred(base, cfg)))});
  }

  // Attention compositions with respect to every feature input, probing
  // the weighted sum of outputs on 2x2x3 instances.
  {
    std::mt19937_64 rng(505);
    const int h = 2, w = 2, d = 3;
    const FeatureMap f_f(detail::random_grid3(rng, h, w, d, -1.0, 1.0));
    const FeatureMap f_b(detail::random_grid3(rng, h, w, d, -1.0, 1.0));
    const FeatureMap f_f_re(detail::random_grid3(rng, h, w, d, -1.0, 1.0));
    const FeatureMap f_d(detail::random_grid3(rng, h, w, d, -1.0, 1.0));
    CctWeights weights;
    weights.fuse_kernel = detail::random_grid(rng, 2 * d, d, -1.0, 1.0);
    weights.fuse_bias.resize(d);
    std::uniform_real_distribution<double> bias(-0.5, 0.5);
    for (double& b : weights.fuse_bias) b = bias(rng);
    const FeatureMap probe(detail::random_grid3(rng, h, w, d, -1.0, 1.0));

    const auto weighted = [&](const FeatureMap& out) {
      ExactSum acc;
      for (std::size_t i = 0; i < out.values.data().size(); ++i)
        acc.add_product(out.values.data()[i], probe.values.data()[i]);
      return acc.result();
    };

    const CctCvBackward cv_grad =
        cct_cv_backward(f_f, f_b, f_f_re, weights, probe);
    const auto cv_input = [&](const char* name, const FeatureMap& base,
                              const FeatureMap& grad, auto rebuild) {
      const auto f = [&](const std::vector<double>& x) {
        return weighted(rebuild(FeatureMap(detail::to_grid3(x, h, w, d))));
      };
      results.push_back({name, check_gradient(f,
                                              detail::flatten(base.values),
                                              detail::flatten(grad.values))});
    };
    cv_input("cct_cv/f_f", f_f, cv_grad.grad_f_f, [&](const FeatureMap& x) {
      return cct_cv(x, f_b, f_f_re, weights);
    });
    cv_input("cct_cv/f_b", f_b, cv_grad.grad_f_b, [&](const FeatureMap& x) {
      return cct_cv(f_f, x, f_f_re, weights);
    });
    cv_input("cct_cv/f_f_re", f_f_re, cv_grad.grad_f_f_re,
             [&](const FeatureMap& x) { return cct_cv(f_f, f_b, x, weights); });

    const CctCmBackward cm_grad = cct_cm_backward(f_b, f_f, f_d, probe);
    cv_input("cct_cm/f_b", f_b, cm_grad.grad_f_b, [&](const FeatureMap& x) {
      return cct_cm(x, f_f, f_d);
    });
    cv_input("cct_cm/f_f", f_f, cm_grad.grad_f_f, [&](const FeatureMap& x) {
      return cct_cm(f_b, x, f_d);
    });
    cv_input("cct_cm/f_d", f_d, cm_grad.grad_f_d, [&](const FeatureMap& x) {
      return cct_cm(f_b, f_f, x);
    });
  }

  return results;
}

}  // namespace crossview
