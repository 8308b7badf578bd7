#pragma once

// Fixed-palette visualizations for the CLI. These are derived artifacts
// for eyeballing results; nothing reads them back.

#include <algorithm>
#include <cmath>
#include <limits>

#include "crossview/image.hpp"
#include "crossview/layout_loss.hpp"
#include "crossview/types.hpp"

namespace crossview {

namespace detail {

// Five-stop linear colormap: navy, blue, cyan, yellow, red at t = 0,
// 0.25, 0.5, 0.75, 1.
inline void colormap(double t, double rgb[3]) {
  static constexpr double stops[5][3] = {{0.00, 0.00, 0.35},
                                         {0.00, 0.20, 1.00},
                                         {0.00, 0.85, 0.85},
                                         {1.00, 0.90, 0.00},
                                         {0.80, 0.00, 0.00}};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const int i = std::min(static_cast<int>(t), 3);
  const double f = t - i;
  for (int k = 0; k < 3; ++k)
    rgb[k] = stops[i][k] + f * (stops[i + 1][k] - stops[i][k]);
}

}  // namespace detail

// Scalar grid rendered through the colormap, normalized to the value range
// of the included pixels. Excluded or non-finite pixels are black.
inline ImagePlane heatmap(const Grid<double>& values,
                          const Mask* include = nullptr) {
  if (include && !values.same_shape(*include))
    throw ShapeMismatch("heatmap: mask shape differs");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int r = 0; r < values.rows(); ++r)
    for (int c = 0; c < values.cols(); ++c) {
      if (include && !(*include)(r, c)) continue;
      const double v = values(r, c);
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  const double span = hi > lo ? hi - lo : 1.0;

  ImagePlane out(values.rows(), values.cols(), 3, 0.0);
  for (int r = 0; r < values.rows(); ++r)
    for (int c = 0; c < values.cols(); ++c) {
      if (include && !(*include)(r, c)) continue;
      const double v = values(r, c);
      if (!std::isfinite(v) || !(hi >= lo)) continue;
      double rgb[3];
      detail::colormap((v - lo) / span, rgb);
      for (int k = 0; k < 3; ++k) out(r, c, k) = rgb[k];
    }
  return out;
}

// Signed distances: blue outside, red inside, white on the boundary, gray
// for the infinite sentinels of uniform masks.
inline ImagePlane sdf_image(const SdfMap& sdf) {
  double max_abs = 0.0;
  for (double v : sdf.values.data())
    if (std::isfinite(v)) max_abs = std::max(max_abs, std::fabs(v));
  if (max_abs == 0.0) max_abs = 1.0;

  ImagePlane out(sdf.values.rows(), sdf.values.cols(), 3, 0.0);
  for (int r = 0; r < sdf.values.rows(); ++r)
    for (int c = 0; c < sdf.values.cols(); ++c) {
      const double v = sdf.values(r, c);
      if (!std::isfinite(v)) {
        for (int k = 0; k < 3; ++k) out(r, c, k) = 0.5;
        continue;
      }
      const double t = std::fabs(v) / max_abs;
      if (v > 0.0) {
        out(r, c, 0) = 1.0 - t;
        out(r, c, 1) = 1.0 - t;
        out(r, c, 2) = 1.0;
      } else if (v < 0.0) {
        out(r, c, 0) = 1.0;
        out(r, c, 1) = 1.0 - t;
        out(r, c, 2) = 1.0 - t;
      } else {
        out(r, c, 0) = out(r, c, 1) = out(r, c, 2) = 1.0;
      }
    }
  return out;
}

// Prediction (threshold 0.5) against ground truth: green = ground truth
// only, red = prediction only, yellow = both, dark gray = neither.
inline ImagePlane layout_overlay(const Grid<double>& pred, const Mask& gt) {
  if (!pred.same_shape(gt))
    throw ShapeMismatch("layout_overlay: shapes differ");
  ImagePlane out(pred.rows(), pred.cols(), 3, 0.0);
  for (int r = 0; r < pred.rows(); ++r)
    for (int c = 0; c < pred.cols(); ++c) {
      const bool p = pred(r, c) > 0.5;
      const bool g = gt(r, c) != 0;
      if (p && g) {
        out(r, c, 0) = out(r, c, 1) = 0.9;
      } else if (g) {
        out(r, c, 1) = 0.8;
      } else if (p) {
        out(r, c, 0) = 0.8;
      } else {
        out(r, c, 0) = out(r, c, 1) = out(r, c, 2) = 0.15;
      }
    }
  return out;
}

}  // namespace crossview
