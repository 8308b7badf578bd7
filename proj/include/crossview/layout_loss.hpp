#pragma once

// Hybrid BEV layout segmentation loss: class-weighted binary cross-entropy,
// soft IoU averaged over the foreground and background channels, and a
// boundary term that multiplies predictions with a signed Euclidean
// distance field of the ground truth. Components carry analytic gradients
// with respect to the prediction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "crossview/numeric.hpp"
#include "crossview/types.hpp"

namespace crossview {

enum class LayoutCategory { road, vehicle };

inline const char* to_string(LayoutCategory c) {
  return c == LayoutCategory::road ? "road" : "vehicle";
}

struct LayoutGrid {
  Grid<double> pred;  // per-pixel foreground probability in [0, 1]
  Mask gt;            // binary ground truth
  LayoutCategory category = LayoutCategory::road;

  LayoutGrid(Grid<double> p, Mask g, LayoutCategory cat)
      : pred(std::move(p)), gt(std::move(g)), category(cat) {
    validate();
  }

  int rows() const { return pred.rows(); }
  int cols() const { return pred.cols(); }

  void validate() const {
    if (!pred.same_shape(gt))
      throw ShapeMismatch("LayoutGrid: pred and gt shapes differ");
    for (double v : pred.data())
      if (!(v >= 0.0 && v <= 1.0))
        throw Error("LayoutGrid: pred values must lie in [0, 1]");
    for (std::uint8_t v : gt.data())
      if (v > 1) throw Error("LayoutGrid: gt values must be 0 or 1");
  }
};

enum class UnionMode { standard, paper_literal };

struct LayoutLossConfig {
  double w_road = 5.0;
  double w_vehicle = 15.0;
  double lambda = 20.0;
  UnionMode union_mode = UnionMode::standard;
  bool positive_only_weight = false;  // apply the class weight to the
                                      // positive term only

  void validate() const {
    if (!(w_road > 0.0) || !(w_vehicle > 0.0))
      throw Error("LayoutLossConfig: class weights must be positive");
    if (!(lambda >= 0.0)) throw Error("LayoutLossConfig: lambda must be >= 0");
  }

  double weight_for(LayoutCategory c) const {
    return c == LayoutCategory::road ? w_road : w_vehicle;
  }
};

inline constexpr double kBceClamp = 1e-7;

// Class-weighted binary cross-entropy, averaged over pixels. Predictions
// are clamped to [eps, 1 - eps] before the logarithms. By default the
// class weight multiplies both terms; the positive-only variant weights
// just the foreground term.
inline double wbce_loss(const LayoutGrid& layout, double weight,
                        bool positive_only = false) {
  const int n = layout.rows() * layout.cols();
  ExactSum acc;
  for (int r = 0; r < layout.rows(); ++r)
    for (int c = 0; c < layout.cols(); ++c) {
      const double x =
          std::clamp(layout.pred(r, c), kBceClamp, 1.0 - kBceClamp);
      const double y = layout.gt(r, c);
      const double w_neg = positive_only ? 1.0 : weight;
      acc.add(-(weight * y * std::log(x) +
                w_neg * (1.0 - y) * std::log1p(-x)));
    }
  return acc.result() / n;
}

inline Grid<double> wbce_loss_grad_pred(const LayoutGrid& layout, double weight,
                                        bool positive_only = false) {
  const int n = layout.rows() * layout.cols();
  Grid<double> grad(layout.rows(), layout.cols(), 0.0);
  for (int r = 0; r < layout.rows(); ++r)
    for (int c = 0; c < layout.cols(); ++c) {
      const double p = layout.pred(r, c);
      if (p < kBceClamp || p > 1.0 - kBceClamp) continue;  // clamp is flat
      const double y = layout.gt(r, c);
      const double w_neg = positive_only ? 1.0 : weight;
      grad(r, c) = (-weight * y / p + w_neg * (1.0 - y) / (1.0 - p)) / n;
    }
  return grad;
}

struct SoftIouResult {
  double value = 0.0;
  bool degenerate = false;  // a channel had an empty union
};

namespace detail {

// One channel of the soft IoU: -intersection / union. The union is
// sum(x + y - x*y) in standard mode; paper-literal mode adds the
// intersection term instead, which caps a perfect match at -1/3. An empty
// union contributes zero and sets the flag.
inline double soft_iou_channel(const LayoutGrid& layout, bool background,
                               UnionMode mode, bool& degenerate) {
  ExactSum inter, uni;
  for (int r = 0; r < layout.rows(); ++r)
    for (int c = 0; c < layout.cols(); ++c) {
      const double x = background ? 1.0 - layout.pred(r, c) : layout.pred(r, c);
      const double y = background ? 1.0 - layout.gt(r, c) : layout.gt(r, c);
      inter.add(x * y);
      uni.add(mode == UnionMode::standard ? x + y - x * y : x + y + x * y);
    }
  const double u = uni.result();
  if (u == 0.0) {
    degenerate = true;
    return 0.0;
  }
  return -inter.result() / u;
}

}  // namespace detail

// Soft IoU loss averaged over the foreground and background channels.
inline SoftIouResult soft_iou_loss(const LayoutGrid& layout,
                                   const LayoutLossConfig& cfg) {
  cfg.validate();
  SoftIouResult out;
  const double fg =
      detail::soft_iou_channel(layout, false, cfg.union_mode, out.degenerate);
  const double bg =
      detail::soft_iou_channel(layout, true, cfg.union_mode, out.degenerate);
  out.value = 0.5 * (fg + bg);
  return out;
}

inline Grid<double> soft_iou_loss_grad_pred(const LayoutGrid& layout,
                                            const LayoutLossConfig& cfg) {
  cfg.validate();
  Grid<double> grad(layout.rows(), layout.cols(), 0.0);
  for (int channel = 0; channel < 2; ++channel) {
    const bool background = channel == 1;
    ExactSum inter_acc, uni_acc;
    for (int r = 0; r < layout.rows(); ++r)
      for (int c = 0; c < layout.cols(); ++c) {
        const double x =
            background ? 1.0 - layout.pred(r, c) : layout.pred(r, c);
        const double y = background ? 1.0 - layout.gt(r, c) : layout.gt(r, c);
        inter_acc.add(x * y);
        uni_acc.add(cfg.union_mode == UnionMode::standard ? x + y - x * y
                                                          : x + y + x * y);
      }
    const double u = uni_acc.result();
    if (u == 0.0) continue;
    const double inter = inter_acc.result();
    for (int r = 0; r < layout.rows(); ++r)
      for (int c = 0; c < layout.cols(); ++c) {
        const double y = background ? 1.0 - layout.gt(r, c) : layout.gt(r, c);
        const double du = cfg.union_mode == UnionMode::standard ? 1.0 - y
                                                                : 1.0 + y;
        double d = -(y * u - inter * du) / (u * u);
        if (background) d = -d;  // x_bg = 1 - pred
        grad(r, c) += 0.5 * d;
      }
  }
  return grad;
}

struct SdfMap {
  Grid<double> values;
  bool uniform = false;  // gt was all-foreground or all-background
};

namespace detail {

// One-dimensional squared-distance transform (lower envelope of
// parabolas). Inputs and outputs are exact integers stored as doubles, so
// results agree bit for bit with a brute-force scan.
inline void squared_distance_1d(const std::vector<double>& f,
                                std::vector<double>& d) {
  const int n = static_cast<int>(f.size());
  d.assign(n, 0.0);
  std::vector<int> v(n, 0);
  std::vector<double> z(n + 1, 0.0);
  const double inf = std::numeric_limits<double>::infinity();
  int k = 0;
  v[0] = 0;
  z[0] = -inf;
  z[1] = inf;
  for (int q = 1; q < n; ++q) {
    double s = 0.0;
    while (true) {
      const int p = v[k];
      s = ((f[q] + q * q) - (f[p] + p * p)) / (2.0 * (q - p));
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const int p = v[k];
    d[q] = (q - p) * (q - p) + f[p];
  }
}

}  // namespace detail

// Signed Euclidean distance to the ground-truth boundary. The boundary is
// the set of foreground pixels with a 4-connected background neighbor;
// those pixels get value zero, interior foreground negative distances and
// background positive distances. A uniform mask has no boundary, so all
// values become infinite sentinels with matching sign and the flag is set.
inline SdfMap signed_distance(const Mask& gt) {
  const int h = gt.rows();
  const int w = gt.cols();
  for (std::uint8_t v : gt.data())
    if (v > 1) throw Error("signed_distance: gt values must be 0 or 1");

  SdfMap out;
  out.values = Grid<double>(h, w, 0.0);
  bool any_fg = false, any_bg = false;
  for (std::uint8_t v : gt.data()) (v ? any_fg : any_bg) = true;
  if (!any_fg || !any_bg) {
    const double inf = std::numeric_limits<double>::infinity();
    out.uniform = true;
    for (double& v : out.values.data()) v = any_fg ? -inf : inf;
    return out;
  }

  Mask boundary(h, w, 0);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      if (!gt(r, c)) continue;
      const bool edge = (r > 0 && !gt(r - 1, c)) || (r + 1 < h && !gt(r + 1, c)) ||
                        (c > 0 && !gt(r, c - 1)) || (c + 1 < w && !gt(r, c + 1));
      if (edge) boundary(r, c) = 1;
    }

  // Two-pass exact squared EDT seeded at boundary pixels. Non-seeds start
  // at a finite sentinel exceeding every possible squared distance; this
  // keeps the parabola intersections free of inf - inf while staying exact,
  // because any candidate through a sentinel loses to a true distance.
  const double far_away =
      static_cast<double>(h - 1) * (h - 1) + static_cast<double>(w - 1) * (w - 1) + 1.0;
  Grid<double> sq(h, w, far_away);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (boundary(r, c)) sq(r, c) = 0.0;
  std::vector<double> line, dist;
  for (int r = 0; r < h; ++r) {
    line.assign(w, 0.0);
    for (int c = 0; c < w; ++c) line[c] = sq(r, c);
    detail::squared_distance_1d(line, dist);
    for (int c = 0; c < w; ++c) sq(r, c) = dist[c];
  }
  for (int c = 0; c < w; ++c) {
    line.assign(h, 0.0);
    for (int r = 0; r < h; ++r) line[r] = sq(r, c);
    detail::squared_distance_1d(line, dist);
    for (int r = 0; r < h; ++r) sq(r, c) = dist[r];
  }

  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const double d = std::sqrt(sq(r, c));
      out.values(r, c) = boundary(r, c) ? 0.0 : (gt(r, c) ? -d : d);
    }
  return out;
}

// Mean of sdf * pred over pixels with finite distances.
inline double boundary_loss(const Grid<double>& pred, const SdfMap& sdf) {
  if (!pred.same_shape(sdf.values))
    throw ShapeMismatch("boundary_loss: shapes differ");
  ExactSum acc;
  std::size_t count = 0;
  for (int r = 0; r < pred.rows(); ++r)
    for (int c = 0; c < pred.cols(); ++c) {
      const double d = sdf.values(r, c);
      if (!std::isfinite(d)) continue;
      acc.add(d * pred(r, c));
      ++count;
    }
  return count ? acc.result() / count : 0.0;
}

inline Grid<double> boundary_loss_grad_pred(const Grid<double>& pred,
                                            const SdfMap& sdf) {
  if (!pred.same_shape(sdf.values))
    throw ShapeMismatch("boundary_loss_grad_pred: shapes differ");
  Grid<double> grad(pred.rows(), pred.cols(), 0.0);
  std::size_t count = 0;
  for (double d : sdf.values.data())
    if (std::isfinite(d)) ++count;
  if (count == 0) return grad;
  for (int r = 0; r < pred.rows(); ++r)
    for (int c = 0; c < pred.cols(); ++c)
      if (std::isfinite(sdf.values(r, c)))
        grad(r, c) = sdf.values(r, c) / count;
  return grad;
}

struct HybridLossResult {
  double value = 0.0;
  double wbce = 0.0;
  double soft_iou = 0.0;
  double boundary = 0.0;
  bool iou_degenerate = false;
  bool uniform_mask = false;
};

// Per-category hybrid loss: wbce + lambda * (soft IoU + boundary term).
inline HybridLossResult hybrid_loss(const LayoutGrid& layout,
                                    const LayoutLossConfig& cfg) {
  cfg.validate();
  HybridLossResult out;
  const double w = cfg.weight_for(layout.category);
  out.wbce = wbce_loss(layout, w, cfg.positive_only_weight);
  const SoftIouResult iou = soft_iou_loss(layout, cfg);
  out.soft_iou = iou.value;
  out.iou_degenerate = iou.degenerate;
  const SdfMap sdf = signed_distance(layout.gt);
  out.uniform_mask = sdf.uniform;
  out.boundary = boundary_loss(layout.pred, sdf);
  out.value = out.wbce + cfg.lambda * out.soft_iou + cfg.lambda * out.boundary;
  return out;
}

inline Grid<double> hybrid_loss_grad_pred(const LayoutGrid& layout,
                                          const LayoutLossConfig& cfg) {
  cfg.validate();
  const double w = cfg.weight_for(layout.category);
  Grid<double> grad =
      wbce_loss_grad_pred(layout, w, cfg.positive_only_weight);
  const Grid<double> giou = soft_iou_loss_grad_pred(layout, cfg);
  const SdfMap sdf = signed_distance(layout.gt);
  const Grid<double> gbound = boundary_loss_grad_pred(layout.pred, sdf);
  for (int r = 0; r < grad.rows(); ++r)
    for (int c = 0; c < grad.cols(); ++c)
      grad(r, c) += cfg.lambda * (giou(r, c) + gbound(r, c));
  return grad;
}

struct TotalLayoutLossResult {
  double value = 0.0;
  HybridLossResult road;
  HybridLossResult vehicle;
};

inline TotalLayoutLossResult total_layout_loss(const LayoutGrid& road,
                                               const LayoutGrid& vehicle,
                                               const LayoutLossConfig& cfg) {
  TotalLayoutLossResult out;
  out.road = hybrid_loss(road, cfg);
  out.vehicle = hybrid_loss(vehicle, cfg);
  out.value = out.road.value + out.vehicle.value;
  return out;
}

}  // namespace crossview
