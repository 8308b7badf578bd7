#pragma once

// Structural similarity over a 3x3 mean-filter window, plus the analytic
// gradient with respect to the second image. The window statistics use
// reflect padding so border pixels see a full nine-sample neighborhood.

#include <cmath>

#include "crossview/image.hpp"
#include "crossview/numeric.hpp"
#include "crossview/types.hpp"

namespace crossview {

namespace detail {

inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  if (i < 0) return -i;
  if (i >= n) return 2 * n - 2 - i;
  return i;
}

struct SsimMoments {
  Grid3<double> mu_a;
  Grid3<double> mu_b;
  Grid3<double> e_aa;
  Grid3<double> e_bb;
  Grid3<double> e_ab;
};

inline SsimMoments ssim_moments(const ImagePlane& a, const ImagePlane& b) {
  const int h = a.height();
  const int w = a.width();
  const int c = a.channels();
  SsimMoments m{Grid3<double>(h, w, c), Grid3<double>(h, w, c),
                Grid3<double>(h, w, c), Grid3<double>(h, w, c),
                Grid3<double>(h, w, c)};
  parallel_for(0, h, [&](int r) {
    for (int col = 0; col < w; ++col) {
      for (int k = 0; k < c; ++k) {
        double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
        for (int dr = -1; dr <= 1; ++dr) {
          const int rr = reflect_index(r + dr, h);
          for (int dc = -1; dc <= 1; ++dc) {
            const int cc = reflect_index(col + dc, w);
            const double va = a(rr, cc, k);
            const double vb = b(rr, cc, k);
            sa += va;
            sb += vb;
            saa += va * va;
            sbb += vb * vb;
            sab += va * vb;
          }
        }
        m.mu_a(r, col, k) = sa / 9.0;
        m.mu_b(r, col, k) = sb / 9.0;
        m.e_aa(r, col, k) = saa / 9.0;
        m.e_bb(r, col, k) = sbb / 9.0;
        m.e_ab(r, col, k) = sab / 9.0;
      }
    }
  });
  return m;
}

}  // namespace detail

// Per-pixel SSIM between two images of identical shape, averaged over
// channels. Variances and the covariance are the biased window estimates
// (second moment minus squared mean).
inline Grid<double> ssim_map(const ImagePlane& a, const ImagePlane& b,
                             double c1, double c2) {
  if (a.height() != b.height() || a.width() != b.width() ||
      a.channels() != b.channels())
    throw ShapeMismatch("ssim_map: image shapes differ");
  const int h = a.height();
  const int w = a.width();
  const int c = a.channels();
  const detail::SsimMoments m = detail::ssim_moments(a, b);
  Grid<double> out(h, w);
  parallel_for(0, h, [&](int r) {
    for (int col = 0; col < w; ++col) {
      double acc = 0.0;
      for (int k = 0; k < c; ++k) {
        const double mu_a = m.mu_a(r, col, k);
        const double mu_b = m.mu_b(r, col, k);
        const double var_a = m.e_aa(r, col, k) - mu_a * mu_a;
        const double var_b = m.e_bb(r, col, k) - mu_b * mu_b;
        const double cov = m.e_ab(r, col, k) - mu_a * mu_b;
        const double n1 = 2.0 * mu_a * mu_b + c1;
        const double n2 = 2.0 * cov + c2;
        const double d1 = mu_a * mu_a + mu_b * mu_b + c1;
        const double d2 = var_a + var_b + c2;
        acc += (n1 * n2) / (d1 * d2);
      }
      out(r, col) = acc / c;
    }
  });
  return out;
}

// Gradient of sum_p weight(p) * ssim_map(a, b)(p) with respect to b. The
// window statistics are linear gathers over reflect-padded neighborhoods,
// so the backward pass scatters each pixel's contribution back through the
// same nine reflected taps.
inline Grid3<double> ssim_map_grad_b(const ImagePlane& a, const ImagePlane& b,
                                     double c1, double c2,
                                     const Grid<double>& weight) {
  if (a.height() != b.height() || a.width() != b.width() ||
      a.channels() != b.channels())
    throw ShapeMismatch("ssim_map_grad_b: image shapes differ");
  if (weight.rows() != a.height() || weight.cols() != a.width())
    throw ShapeMismatch("ssim_map_grad_b: weight shape differs");
  const int h = a.height();
  const int w = a.width();
  const int c = a.channels();
  const detail::SsimMoments m = detail::ssim_moments(a, b);
  Grid3<double> grad(h, w, c, 0.0);
  for (int r = 0; r < h; ++r) {
    for (int col = 0; col < w; ++col) {
      const double wp = weight(r, col) / c;
      if (wp == 0.0) continue;
      for (int k = 0; k < c; ++k) {
        const double mu_a = m.mu_a(r, col, k);
        const double mu_b = m.mu_b(r, col, k);
        const double var_a = m.e_aa(r, col, k) - mu_a * mu_a;
        const double var_b = m.e_bb(r, col, k) - mu_b * mu_b;
        const double cov = m.e_ab(r, col, k) - mu_a * mu_b;
        const double n1 = 2.0 * mu_a * mu_b + c1;
        const double n2 = 2.0 * cov + c2;
        const double d1 = mu_a * mu_a + mu_b * mu_b + c1;
        const double d2 = var_a + var_b + c2;
        const double s = (n1 * n2) / (d1 * d2);

        // Partials with respect to the raw window statistics. The variance
        // and covariance enter through e_bb and e_ab; mu_b additionally
        // feeds n1, d1 and the centering terms of var_b and cov.
        const double d_s_d_eab = 2.0 * n1 / (d1 * d2);
        const double d_s_d_ebb = -s / d2;
        const double d_s_d_mub = 2.0 * mu_a * n2 / (d1 * d2)      // n1
                                 - s * (2.0 * mu_b) / d1          // d1
                                 + d_s_d_ebb * (-2.0 * mu_b)      // var_b
                                 + d_s_d_eab * (-mu_a);           // cov

        for (int dr = -1; dr <= 1; ++dr) {
          const int rr = detail::reflect_index(r + dr, h);
          for (int dc = -1; dc <= 1; ++dc) {
            const int cc = detail::reflect_index(col + dc, w);
            const double bq = b(rr, cc, k);
            const double aq = a(rr, cc, k);
            grad(rr, cc, k) += wp / 9.0 *
                               (d_s_d_mub + d_s_d_ebb * 2.0 * bq +
                                d_s_d_eab * aq);
          }
        }
      }
    }
  }
  return grad;
}

}  // namespace crossview
