#pragma once

// Self-supervised depth training objective: photometric reconstruction error
// with per-pixel minimum over candidate warps, edge-aware smoothness on
// mean-normalized inverse depth, and a metric-scale residual against a
// projected ground-distance field. Each term has an analytic gradient used
// by the finite-difference harness, and fit_scale recovers the global scale
// factor that minimizes the distance-field residual.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "crossview/bev.hpp"
#include "crossview/image.hpp"
#include "crossview/numeric.hpp"
#include "crossview/ssim.hpp"
#include "crossview/types.hpp"
#include "crossview/warp.hpp"

namespace crossview {

struct DepthPoseLossConfig {
  double alpha = 0.85;         // SSIM share of the photometric error
  double beta = 0.1;           // weight of the metric-scale residual
  double ssim_c1 = 1e-4;       // (0.01)^2
  double ssim_c2 = 9e-4;       // (0.03)^2
  double smooth_weight = 1.0;  // weight of the smoothness term

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0))
      throw Error("DepthPoseLossConfig: alpha must lie in [0, 1]");
    if (!(beta >= 0.0)) throw Error("DepthPoseLossConfig: beta must be >= 0");
    if (!(ssim_c1 > 0.0) || !(ssim_c2 > 0.0))
      throw Error("DepthPoseLossConfig: SSIM constants must be positive");
    if (!(smooth_weight >= 0.0))
      throw Error("DepthPoseLossConfig: smooth_weight must be >= 0");
  }
};

inline Grid<double> ssim(const ImagePlane& a, const ImagePlane& b,
                         const DepthPoseLossConfig& cfg) {
  cfg.validate();
  return ssim_map(a, b, cfg.ssim_c1, cfg.ssim_c2);
}

// Per-pixel photometric error: alpha * (1 - SSIM) / 2 plus (1 - alpha)
// times the channel-mean absolute difference.
inline Grid<double> photometric_error(const ImagePlane& target,
                                      const ImagePlane& recon,
                                      const DepthPoseLossConfig& cfg) {
  cfg.validate();
  if (target.height() != recon.height() || target.width() != recon.width() ||
      target.channels() != recon.channels())
    throw ShapeMismatch("photometric_error: image shapes differ");
  const int h = target.height();
  const int w = target.width();
  const int c = target.channels();
  Grid<double> err = ssim_map(target, recon, cfg.ssim_c1, cfg.ssim_c2);
  parallel_for(0, h, [&](int r) {
    for (int col = 0; col < w; ++col) {
      double l1 = 0.0;
      for (int k = 0; k < c; ++k)
        l1 += std::abs(target(r, col, k) - recon(r, col, k));
      l1 /= c;
      err(r, col) = cfg.alpha * 0.5 * (1.0 - err(r, col)) +
                    (1.0 - cfg.alpha) * l1;
    }
  });
  return err;
}

// Gradient of sum_p weight(p) * photometric_error(p) with respect to the
// reconstruction.
inline Grid3<double> photometric_error_grad_recon(
    const ImagePlane& target, const ImagePlane& recon,
    const DepthPoseLossConfig& cfg, const Grid<double>& weight) {
  cfg.validate();
  if (weight.rows() != target.height() || weight.cols() != target.width())
    throw ShapeMismatch("photometric_error_grad_recon: weight shape differs");
  const int h = target.height();
  const int w = target.width();
  const int c = target.channels();

  Grid<double> ssim_weight(h, w);
  for (int r = 0; r < h; ++r)
    for (int col = 0; col < w; ++col)
      ssim_weight(r, col) = -0.5 * cfg.alpha * weight(r, col);
  Grid3<double> grad =
      ssim_map_grad_b(target, recon, cfg.ssim_c1, cfg.ssim_c2, ssim_weight);

  const double l1_scale = (1.0 - cfg.alpha) / c;
  for (int r = 0; r < h; ++r)
    for (int col = 0; col < w; ++col)
      for (int k = 0; k < c; ++k) {
        const double diff = recon(r, col, k) - target(r, col, k);
        const double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        grad(r, col, k) += weight(r, col) * l1_scale * sgn;
      }
  return grad;
}

struct MinReprojectionResult {
  double loss = 0.0;
  Mask automask;  // 1 where a warped candidate beats every identity error
};

// Per-pixel minimum photometric error over valid warped candidates, masked
// by the auto-masking rule: a pixel contributes only when its best warped
// error is strictly below the smallest identity error against the unwarped
// source frames. Throws EmptyValidRegion when no pixel survives.
inline MinReprojectionResult min_reprojection(
    const ImagePlane& target, const std::vector<WarpResult>& recons,
    const std::vector<ImagePlane>& sources, const DepthPoseLossConfig& cfg) {
  cfg.validate();
  if (recons.empty())
    throw Error("min_reprojection: need at least one reconstruction");
  const int h = target.height();
  const int w = target.width();

  std::vector<Grid<double>> recon_err;
  recon_err.reserve(recons.size());
  for (const WarpResult& r : recons) {
    if (r.valid.rows() != h || r.valid.cols() != w)
      throw ShapeMismatch("min_reprojection: candidate shape differs");
    recon_err.push_back(photometric_error(target, r.image, cfg));
  }
  std::vector<Grid<double>> source_err;
  source_err.reserve(sources.size());
  for (const ImagePlane& s : sources)
    source_err.push_back(photometric_error(target, s, cfg));

  const double inf = std::numeric_limits<double>::infinity();
  MinReprojectionResult out;
  out.automask = Mask(h, w, 0);
  ExactSum acc;
  std::size_t count = 0;
  for (int r = 0; r < h; ++r)
    for (int col = 0; col < w; ++col) {
      double best = inf;
      for (std::size_t m = 0; m < recons.size(); ++m)
        if (recons[m].valid(r, col))
          best = std::min(best, recon_err[m](r, col));
      if (best == inf) continue;
      double identity = inf;
      for (const Grid<double>& e : source_err)
        identity = std::min(identity, e(r, col));
      if (best < identity) {
        out.automask(r, col) = 1;
        acc.add(best);
        ++count;
      }
    }
  if (count == 0)
    throw EmptyValidRegion("min_reprojection: auto-mask removed every pixel");
  out.loss = acc.result() / count;
  return out;
}

namespace detail {

// Channel-mean absolute forward differences of an image along one axis.
inline double image_edge(const ImagePlane& img, int r, int c, int dr, int dc) {
  double g = 0.0;
  for (int k = 0; k < img.channels(); ++k)
    g += std::abs(img(r + dr, c + dc, k) - img(r, c, k));
  return g / img.channels();
}

struct InverseDepthStats {
  Grid<double> recip;
  double mean = 0.0;
};

inline InverseDepthStats normalized_inverse_depth(const DepthMap& depth) {
  const int h = depth.height();
  const int w = depth.width();
  InverseDepthStats s{Grid<double>(h, w), 0.0};
  ExactSum acc;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      s.recip(r, c) = 1.0 / depth(r, c);
      acc.add(s.recip(r, c));
    }
  s.mean = acc.result() / (static_cast<double>(h) * w);
  return s;
}

}  // namespace detail

// Edge-aware smoothness of mean-normalized inverse depth. Forward
// differences along each axis are weighted by exp(-|image gradient|) and
// averaged over the interior difference positions of that axis.
inline double smoothness_loss(const DepthMap& depth, const ImagePlane& image) {
  if (depth.height() != image.height() || depth.width() != image.width())
    throw ShapeMismatch("smoothness_loss: depth and image shapes differ");
  const int h = depth.height();
  const int w = depth.width();
  if (h < 2 && w < 2) return 0.0;
  const detail::InverseDepthStats s = detail::normalized_inverse_depth(depth);

  ExactSum total;
  if (w >= 2) {
    ExactSum acc;
    for (int r = 0; r < h; ++r)
      for (int c = 0; c + 1 < w; ++c) {
        const double dmu = (s.recip(r, c + 1) - s.recip(r, c)) / s.mean;
        acc.add(std::abs(dmu) * std::exp(-detail::image_edge(image, r, c, 0, 1)));
      }
    total.add(acc.result() / (static_cast<double>(h) * (w - 1)));
  }
  if (h >= 2) {
    ExactSum acc;
    for (int r = 0; r + 1 < h; ++r)
      for (int c = 0; c < w; ++c) {
        const double dmu = (s.recip(r + 1, c) - s.recip(r, c)) / s.mean;
        acc.add(std::abs(dmu) * std::exp(-detail::image_edge(image, r, c, 1, 0)));
      }
    total.add(acc.result() / (static_cast<double>(h - 1) * w));
  }
  return total.result();
}

// Gradient of smoothness_loss with respect to the depth values. The chain
// runs through the mean normalization, so every depth pixel receives a
// contribution from the global mean even when its own differences vanish.
inline Grid<double> smoothness_loss_grad_depth(const DepthMap& depth,
                                               const ImagePlane& image) {
  if (depth.height() != image.height() || depth.width() != image.width())
    throw ShapeMismatch("smoothness_loss_grad_depth: shapes differ");
  const int h = depth.height();
  const int w = depth.width();
  Grid<double> grad(h, w, 0.0);
  if (h < 2 && w < 2) return grad;
  const detail::InverseDepthStats s = detail::normalized_inverse_depth(depth);

  // Accumulate d(loss)/d(mu) where mu = recip / mean.
  Grid<double> gmu(h, w, 0.0);
  if (w >= 2) {
    const double norm = 1.0 / (static_cast<double>(h) * (w - 1));
    for (int r = 0; r < h; ++r)
      for (int c = 0; c + 1 < w; ++c) {
        const double diff = s.recip(r, c + 1) - s.recip(r, c);
        if (diff == 0.0) continue;
        const double a = (diff > 0.0 ? 1.0 : -1.0) * norm *
                         std::exp(-detail::image_edge(image, r, c, 0, 1));
        gmu(r, c + 1) += a;
        gmu(r, c) -= a;
      }
  }
  if (h >= 2) {
    const double norm = 1.0 / (static_cast<double>(h - 1) * w);
    for (int r = 0; r + 1 < h; ++r)
      for (int c = 0; c < w; ++c) {
        const double diff = s.recip(r + 1, c) - s.recip(r, c);
        if (diff == 0.0) continue;
        const double a = (diff > 0.0 ? 1.0 : -1.0) * norm *
                         std::exp(-detail::image_edge(image, r, c, 1, 0));
        gmu(r + 1, c) += a;
        gmu(r, c) -= a;
      }
  }

  // mu_i = r_i / m with m the mean of all r. d(loss)/d(r_j) picks up the
  // direct term and the shared mean term; depth enters through r = 1/d.
  ExactSum dot;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) dot.add_product(gmu(r, c), s.recip(r, c));
  const double shared = dot.result() /
                        (static_cast<double>(h) * w * s.mean * s.mean);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const double drecip = gmu(r, c) / s.mean - shared;
      grad(r, c) = -drecip / (depth(r, c) * depth(r, c));
    }
  return grad;
}

struct CgtResult {
  double value = 0.0;
  std::size_t valid_count = 0;
  bool empty = false;  // set when the field has no valid overlap
};

// Relative depth residual against the projected distance field, averaged
// over front-view pixels where the field is valid.
inline CgtResult cgt_loss(const DepthMap& depth, const DistanceField& field) {
  if (depth.height() != field.fv_z.rows() || depth.width() != field.fv_z.cols())
    throw ShapeMismatch("cgt_loss: depth and field shapes differ");
  ExactSum acc;
  std::size_t count = 0;
  for (int r = 0; r < depth.height(); ++r)
    for (int c = 0; c < depth.width(); ++c) {
      if (!field.fv_mask(r, c)) continue;
      const double z = field.fv_z(r, c);
      acc.add(std::abs(z - depth(r, c)) / z);
      ++count;
    }
  if (count == 0) return CgtResult{0.0, 0, true};
  return CgtResult{acc.result() / count, count, false};
}

inline Grid<double> cgt_loss_grad_depth(const DepthMap& depth,
                                        const DistanceField& field) {
  if (depth.height() != field.fv_z.rows() || depth.width() != field.fv_z.cols())
    throw ShapeMismatch("cgt_loss_grad_depth: depth and field shapes differ");
  Grid<double> grad(depth.height(), depth.width(), 0.0);
  std::size_t count = 0;
  for (int r = 0; r < depth.height(); ++r)
    for (int c = 0; c < depth.width(); ++c)
      if (field.fv_mask(r, c)) ++count;
  if (count == 0) return grad;
  for (int r = 0; r < depth.height(); ++r)
    for (int c = 0; c < depth.width(); ++c) {
      if (!field.fv_mask(r, c)) continue;
      const double z = field.fv_z(r, c);
      const double diff = z - depth(r, c);
      const double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      grad(r, c) = -sgn / (z * count);
    }
  return grad;
}

// Combined objective from precomputed term values.
inline double depth_pose_objective(double photometric, double smoothness,
                                   double cgt, const DepthPoseLossConfig& cfg) {
  cfg.validate();
  return photometric + cfg.smooth_weight * smoothness + cfg.beta * cgt;
}

struct FitScaleResult {
  double scale = 1.0;
  double objective = 0.0;  // cgt_loss at the fitted scale
};

// Finds the positive scale s minimizing cgt_loss(s * depth, field). The
// objective is piecewise linear and convex in s with breakpoints at the
// per-pixel ratios z / d, so a golden-section search is refined by snapping
// to the breakpoints inside the final bracket.
inline FitScaleResult fit_scale(const DepthMap& depth,
                                const DistanceField& field) {
  if (depth.height() != field.fv_z.rows() || depth.width() != field.fv_z.cols())
    throw ShapeMismatch("fit_scale: depth and field shapes differ");
  std::vector<double> z, d;
  for (int r = 0; r < depth.height(); ++r)
    for (int c = 0; c < depth.width(); ++c)
      if (field.fv_mask(r, c)) {
        z.push_back(field.fv_z(r, c));
        d.push_back(depth(r, c));
      }
  if (z.empty()) throw NoValidPixels("fit_scale: field has no valid overlap");
  const std::size_t n = z.size();

  const auto objective = [&](double s) {
    ExactSum acc;
    for (std::size_t i = 0; i < n; ++i)
      acc.add(std::abs(z[i] - s * d[i]) / z[i]);
    return acc.result() / n;
  };

  std::vector<double> ratios(n);
  for (std::size_t i = 0; i < n; ++i) ratios[i] = z[i] / d[i];
  std::sort(ratios.begin(), ratios.end());
  double lo = 0.5 * ratios.front();
  double hi = 2.0 * ratios.back();

  const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = objective(x1);
  double f2 = objective(x2);
  for (int iter = 0; iter < 200 && hi - lo > 1e-13 * std::max(1.0, hi);
       ++iter) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = objective(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = objective(x2);
    }
  }

  FitScaleResult best{0.5 * (lo + hi), 0.0};
  best.objective = objective(best.scale);
  const auto consider = [&](double s) {
    const double f = objective(s);
    if (f < best.objective) {
      best.objective = f;
      best.scale = s;
    }
  };
  // The true minimizer is one of the breakpoints; scan those near the
  // bracket so exact cases (a single valid pixel, noise-free fields) land
  // on the ratio itself.
  const auto first = std::lower_bound(ratios.begin(), ratios.end(),
                                      lo - 1e-9 * std::max(1.0, lo));
  const auto last = std::upper_bound(ratios.begin(), ratios.end(),
                                     hi + 1e-9 * std::max(1.0, hi));
  for (auto it = first; it != last; ++it) consider(*it);
  return best;
}

}  // namespace crossview
