#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "crossview/types.hpp"

namespace crossview {

// Dense intensity image, values in [0, 1].
class ImagePlane {
 public:
  ImagePlane() = default;
  explicit ImagePlane(Grid3<double> pixels) : px_(std::move(pixels)) { validate(); }
  ImagePlane(int height, int width, int channels, double fill = 0.0)
      : px_(height, width, channels, fill) {
    validate();
  }

  int height() const { return px_.height(); }
  int width() const { return px_.width(); }
  int channels() const { return px_.channels(); }

  double& operator()(int r, int c, int k) { return px_(r, c, k); }
  double operator()(int r, int c, int k) const { return px_(r, c, k); }

  Grid3<double>& pixels() { return px_; }
  const Grid3<double>& pixels() const { return px_; }

  bool same_shape(const ImagePlane& other) const { return px_.same_shape(other.px_); }

  void validate() const {
    for (double v : px_.data())
      if (!(v >= 0.0 && v <= 1.0))
        throw Error("image: intensity outside [0, 1] or non-finite");
  }

 private:
  Grid3<double> px_;
};

// Per-pixel depth in meters, strictly positive and finite.
class DepthMap {
 public:
  DepthMap() = default;
  explicit DepthMap(Grid<double> depth) : d_(std::move(depth)) { validate(); }
  DepthMap(int height, int width, double fill) : d_(height, width, fill) { validate(); }

  int height() const { return d_.rows(); }
  int width() const { return d_.cols(); }

  double& operator()(int r, int c) { return d_(r, c); }
  double operator()(int r, int c) const { return d_(r, c); }

  Grid<double>& values() { return d_; }
  const Grid<double>& values() const { return d_; }

  void validate() const {
    for (double v : d_.data()) {
      if (!std::isfinite(v)) throw NonFiniteValue("depth: non-finite value");
      if (!(v > 0.0)) throw NonPositiveDepth("depth: values must be positive");
    }
  }

 private:
  Grid<double> d_;
};

struct SampledImage {
  ImagePlane image;
  Mask valid;
};

// Bilinear interpolation of img at per-pixel (u, v) coordinates. The mask
// is 0 where the 4-neighborhood leaves the image; masked outputs are 0.
// In-range results are clamped to [0, 1] to absorb rounding.
inline SampledImage bilinear_sample(const ImagePlane& img, const Grid<double>& coord_u,
                                    const Grid<double>& coord_v) {
  if (!coord_u.same_shape(coord_v))
    throw ShapeMismatch("bilinear_sample: coordinate grids differ in shape");
  const int out_h = coord_u.rows();
  const int out_w = coord_u.cols();
  const int w = img.width();
  const int h = img.height();
  const int ch = img.channels();

  SampledImage out;
  out.image = ImagePlane(out_h, out_w, ch, 0.0);
  out.valid = Mask(out_h, out_w, 0);

  for (int r = 0; r < out_h; ++r) {
    for (int c = 0; c < out_w; ++c) {
      const double u = coord_u(r, c);
      const double v = coord_v(r, c);
      if (!std::isfinite(u) || !std::isfinite(v)) continue;
      if (u < 0.0 || u > w - 1 || v < 0.0 || v > h - 1) continue;

      int u0 = static_cast<int>(std::floor(u));
      int v0 = static_cast<int>(std::floor(v));
      u0 = std::clamp(u0, 0, std::max(w - 2, 0));  // u == w-1 lands on the last texel pair
      v0 = std::clamp(v0, 0, std::max(h - 2, 0));
      const int u1 = std::min(u0 + 1, w - 1);
      const int v1 = std::min(v0 + 1, h - 1);
      const double fu = u - u0;
      const double fv = v - v0;

      for (int k = 0; k < ch; ++k) {
        const double i00 = img(v0, u0, k);
        const double i01 = img(v0, u1, k);
        const double i10 = img(v1, u0, k);
        const double i11 = img(v1, u1, k);
        double val = (1.0 - fv) * ((1.0 - fu) * i00 + fu * i01) +
                     fv * ((1.0 - fu) * i10 + fu * i11);
        out.image(r, c, k) = std::clamp(val, 0.0, 1.0);
      }
      out.valid(r, c) = 1;
    }
  }
  return out;
}

}  // namespace crossview
