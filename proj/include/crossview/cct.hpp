#pragma once

// Cross-view and cross-modal attention: dot-product correlation between
// flattened feature grids, row-softmax attention, and the fused output that
// feeds a layout decoder. Queries come from the BEV feature map, keys and
// values from front-view maps. The composed operators stream one query row
// at a time so the HW x HW correlation matrix is never materialized, and
// every row reduction uses correctly rounded summation so that spatially
// permuting the inputs permutes the output bit for bit.

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "crossview/numeric.hpp"
#include "crossview/types.hpp"

namespace crossview {

struct FeatureMap {
  Grid3<double> values;

  FeatureMap(int height, int width, int channels, double fill = 0.0)
      : values(height, width, channels, fill) {}
  explicit FeatureMap(Grid3<double> v) : values(std::move(v)) { validate(); }

  int height() const { return values.height(); }
  int width() const { return values.width(); }
  int channels() const { return values.channels(); }
  int locations() const { return values.height() * values.width(); }

  double& operator()(int r, int c, int k) { return values(r, c, k); }
  double operator()(int r, int c, int k) const { return values(r, c, k); }

  // Channel vector at flattened location i (row-major over the grid).
  const double* location(int i) const {
    return values.data().data() + static_cast<std::size_t>(i) * channels();
  }
  double* location(int i) {
    return values.data().data() + static_cast<std::size_t>(i) * channels();
  }

  void validate() const {
    for (double v : values.data())
      if (!std::isfinite(v)) throw NonFiniteValue("FeatureMap: non-finite entry");
  }

  bool same_shape(const FeatureMap& o) const {
    return height() == o.height() && width() == o.width() &&
           channels() == o.channels();
  }
};

struct CorrelationTensor {
  Grid<double> values;  // (H*W) x (H*W), query rows by key columns

  explicit CorrelationTensor(int locations)
      : values(locations, locations, 0.0) {}
  explicit CorrelationTensor(Grid<double> v) : values(std::move(v)) {
    if (values.rows() != values.cols())
      throw ShapeMismatch("CorrelationTensor: matrix must be square");
    for (double x : values.data())
      if (!std::isfinite(x))
        throw NonFiniteValue("CorrelationTensor: non-finite entry");
  }

  int locations() const { return values.rows(); }
  double& operator()(int i, int j) { return values(i, j); }
  double operator()(int i, int j) const { return values(i, j); }
};

struct CctWeights {
  Grid<double> fuse_kernel;        // 2D rows (input channels) x D columns
  std::vector<double> fuse_bias;   // D entries

  void validate(int channels) const {
    if (fuse_kernel.rows() != 2 * channels || fuse_kernel.cols() != channels)
      throw ShapeMismatch("CctWeights: fuse_kernel must be 2D x D");
    if (static_cast<int>(fuse_bias.size()) != channels)
      throw ShapeMismatch("CctWeights: fuse_bias must have D entries");
    for (double v : fuse_kernel.data())
      if (!std::isfinite(v)) throw NonFiniteValue("CctWeights: non-finite kernel");
    for (double v : fuse_bias)
      if (!std::isfinite(v)) throw NonFiniteValue("CctWeights: non-finite bias");
  }
};

namespace detail {

// Writes logits[j] = <query location qi, key location j> / sqrt(D).
inline void correlation_row(const FeatureMap& query, const FeatureMap& key,
                            int qi, double* logits) {
  const int d = query.channels();
  const int n = key.locations();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  const double* q = query.location(qi);
  for (int j = 0; j < n; ++j) {
    const double* k = key.location(j);
    double dot = 0.0;
    for (int c = 0; c < d; ++c) dot += q[c] * k[c];
    logits[j] = dot * inv_sqrt_d;
  }
}

// Softmax over one row of logits followed by aggregation of the value map.
// The denominator and each output channel use correctly rounded sums, so
// the result depends only on the multiset of (logit, value) pairs and not
// on their order.
inline void attention_row(const double* logits, int n, const FeatureMap& value,
                          double* out, std::vector<double>& exp_buf) {
  double row_max = logits[0];
  for (int j = 1; j < n; ++j) row_max = std::max(row_max, logits[j]);
  exp_buf.resize(n);
  ExactSum denom;
  for (int j = 0; j < n; ++j) {
    exp_buf[j] = std::exp(logits[j] - row_max);
    denom.add(exp_buf[j]);
  }
  const double z = denom.result();
  const int d = value.channels();
  for (int c = 0; c < d; ++c) {
    ExactSum num;
    for (int j = 0; j < n; ++j) num.add_product(exp_buf[j], value.location(j)[c]);
    out[c] = num.result() / z;
  }
}

// attention(correlation(query, key), value) one query row at a time.
inline FeatureMap streamed_cross_attention(const FeatureMap& query,
                                           const FeatureMap& key,
                                           const FeatureMap& value) {
  const int n = query.locations();
  FeatureMap out(query.height(), query.width(), value.channels());
  parallel_for(0, n, [&](int i) {
    thread_local std::vector<double> logits;
    thread_local std::vector<double> exp_buf;
    logits.resize(n);
    correlation_row(query, key, i, logits.data());
    attention_row(logits.data(), n, value, out.location(i), exp_buf);
  });
  return out;
}

}  // namespace detail

inline CorrelationTensor correlation(const FeatureMap& query,
                                     const FeatureMap& key) {
  if (!query.same_shape(key))
    throw ShapeMismatch("correlation: query and key shapes differ");
  const int n = query.locations();
  CorrelationTensor c(n);
  parallel_for(0, n, [&](int i) {
    detail::correlation_row(query, key, i, &c.values(i, 0));
  });
  return c;
}

// Row-softmax of a correlation matrix, exposed for inspection.
inline CorrelationTensor softmax_rows(const CorrelationTensor& corr) {
  const int n = corr.locations();
  CorrelationTensor m(n);
  parallel_for(0, n, [&](int i) {
    double row_max = corr(i, 0);
    for (int j = 1; j < n; ++j) row_max = std::max(row_max, corr(i, j));
    ExactSum denom;
    for (int j = 0; j < n; ++j) denom.add(std::exp(corr(i, j) - row_max));
    const double z = denom.result();
    for (int j = 0; j < n; ++j) m(i, j) = std::exp(corr(i, j) - row_max) / z;
  });
  return m;
}

inline FeatureMap attention(const CorrelationTensor& corr,
                            const FeatureMap& value) {
  if (corr.locations() != value.locations())
    throw ShapeMismatch("attention: correlation size does not match value map");
  const int n = corr.locations();
  FeatureMap out(value.height(), value.width(), value.channels());
  parallel_for(0, n, [&](int i) {
    thread_local std::vector<double> exp_buf;
    detail::attention_row(&corr.values(i, 0), n, value, out.location(i),
                          exp_buf);
  });
  return out;
}

// 1x1 convolution of the channel concatenation [a || b] through the fuse
// kernel: out_k = sum_m concat_m * kernel(m, k) + bias_k.
inline FeatureMap fuse_values(const FeatureMap& a, const FeatureMap& b,
                              const CctWeights& w) {
  if (!a.same_shape(b)) throw ShapeMismatch("fuse_values: shapes differ");
  const int d = a.channels();
  w.validate(d);
  FeatureMap out(a.height(), a.width(), d);
  const int n = a.locations();
  parallel_for(0, n, [&](int i) {
    const double* pa = a.location(i);
    const double* pb = b.location(i);
    double* po = out.location(i);
    for (int k = 0; k < d; ++k) {
      double acc = w.fuse_bias[k];
      for (int m = 0; m < d; ++m) acc += pa[m] * w.fuse_kernel(m, k);
      for (int m = 0; m < d; ++m) acc += pb[m] * w.fuse_kernel(d + m, k);
      po[k] = acc;
    }
  });
  return out;
}

// Cross-view branch: BEV queries against front-view keys; values are the
// fused retransformed and original front-view features.
inline FeatureMap cct_cv(const FeatureMap& f_f, const FeatureMap& f_b,
                         const FeatureMap& f_f_re, const CctWeights& w) {
  if (!f_f.same_shape(f_b) || !f_f.same_shape(f_f_re))
    throw ShapeMismatch("cct_cv: feature shapes differ");
  const FeatureMap value = fuse_values(f_f_re, f_f, w);
  return detail::streamed_cross_attention(f_b, f_f, value);
}

// Cross-modal branch: the same BEV-to-front correlation aggregates depth
// decoder features.
inline FeatureMap cct_cm(const FeatureMap& f_b, const FeatureMap& f_f,
                         const FeatureMap& f_d) {
  if (!f_b.same_shape(f_f) || !f_b.same_shape(f_d))
    throw ShapeMismatch("cct_cm: feature shapes differ");
  return detail::streamed_cross_attention(f_b, f_f, f_d);
}

inline FeatureMap cct_fuse(const FeatureMap& f_f, const FeatureMap& f_cv,
                           const FeatureMap& f_cm) {
  if (!f_f.same_shape(f_cv) || !f_f.same_shape(f_cm))
    throw ShapeMismatch("cct_fuse: feature shapes differ");
  FeatureMap out(f_f.height(), f_f.width(), f_f.channels());
  const auto n = f_f.values.data().size();
  for (std::size_t i = 0; i < n; ++i)
    out.values.data()[i] = f_f.values.data()[i] + f_cv.values.data()[i] +
                           f_cm.values.data()[i];
  return out;
}

// ---------------------------------------------------------------------------
// Backward passes. Each computes the gradient of sum(grad_out * output)
// with respect to the inputs, streaming query rows like the forward pass.

struct CrossAttentionBackward {
  FeatureMap grad_query;
  FeatureMap grad_key;
  FeatureMap grad_value;
};

namespace detail {

inline CrossAttentionBackward streamed_cross_attention_backward(
    const FeatureMap& query, const FeatureMap& key, const FeatureMap& value,
    const FeatureMap& grad_out) {
  const int n = query.locations();
  const int d = query.channels();
  const int dv = value.channels();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  CrossAttentionBackward g{FeatureMap(query.height(), query.width(), d),
                           FeatureMap(key.height(), key.width(), d),
                           FeatureMap(value.height(), value.width(), dv)};
  std::vector<double> logits(n), m(n), dm(n), dc(n);
  for (int i = 0; i < n; ++i) {
    correlation_row(query, key, i, logits.data());
    double row_max = logits[0];
    for (int j = 1; j < n; ++j) row_max = std::max(row_max, logits[j]);
    ExactSum denom;
    for (int j = 0; j < n; ++j) {
      m[j] = std::exp(logits[j] - row_max);
      denom.add(m[j]);
    }
    const double z = denom.result();
    for (int j = 0; j < n; ++j) m[j] /= z;

    const double* go = grad_out.location(i);
    // dM_ij = <grad_out_i, V_j>; dV_j += M_ij * grad_out_i.
    for (int j = 0; j < n; ++j) {
      const double* vj = value.location(j);
      double dot = 0.0;
      for (int c = 0; c < dv; ++c) dot += go[c] * vj[c];
      dm[j] = dot;
      double* gv = g.grad_value.location(j);
      for (int c = 0; c < dv; ++c) gv[c] += m[j] * go[c];
    }
    // Softmax backward within the row.
    double inner = 0.0;
    for (int j = 0; j < n; ++j) inner += dm[j] * m[j];
    for (int j = 0; j < n; ++j) dc[j] = m[j] * (dm[j] - inner);
    // Correlation backward: C_ij = <Q_i, K_j> / sqrt(D).
    double* gq = g.grad_query.location(i);
    const double* qi = query.location(i);
    for (int j = 0; j < n; ++j) {
      const double s = dc[j] * inv_sqrt_d;
      const double* kj = key.location(j);
      double* gk = g.grad_key.location(j);
      for (int c = 0; c < d; ++c) {
        gq[c] += s * kj[c];
        gk[c] += s * qi[c];
      }
    }
  }
  return g;
}

}  // namespace detail

struct CctCvBackward {
  FeatureMap grad_f_f;
  FeatureMap grad_f_b;
  FeatureMap grad_f_f_re;
};

inline CctCvBackward cct_cv_backward(const FeatureMap& f_f,
                                     const FeatureMap& f_b,
                                     const FeatureMap& f_f_re,
                                     const CctWeights& w,
                                     const FeatureMap& grad_out) {
  const FeatureMap value = fuse_values(f_f_re, f_f, w);
  CrossAttentionBackward att =
      detail::streamed_cross_attention_backward(f_b, f_f, value, grad_out);
  CctCvBackward g{std::move(att.grad_key), std::move(att.grad_query),
                  FeatureMap(f_f.height(), f_f.width(), f_f.channels())};
  // Convolution backward: d(concat)_m = sum_k kernel(m, k) * d(value)_k,
  // with the first D concat channels feeding f_f_re and the rest f_f.
  const int d = f_f.channels();
  const int n = f_f.locations();
  for (int i = 0; i < n; ++i) {
    const double* gv = att.grad_value.location(i);
    double* gre = g.grad_f_f_re.location(i);
    double* gff = g.grad_f_f.location(i);
    for (int m = 0; m < d; ++m) {
      double acc_re = 0.0, acc_ff = 0.0;
      for (int k = 0; k < d; ++k) {
        acc_re += w.fuse_kernel(m, k) * gv[k];
        acc_ff += w.fuse_kernel(d + m, k) * gv[k];
      }
      gre[m] += acc_re;
      gff[m] += acc_ff;
    }
  }
  return g;
}

struct CctCmBackward {
  FeatureMap grad_f_b;
  FeatureMap grad_f_f;
  FeatureMap grad_f_d;
};

inline CctCmBackward cct_cm_backward(const FeatureMap& f_b,
                                     const FeatureMap& f_f,
                                     const FeatureMap& f_d,
                                     const FeatureMap& grad_out) {
  CrossAttentionBackward att =
      detail::streamed_cross_attention_backward(f_b, f_f, f_d, grad_out);
  return CctCmBackward{std::move(att.grad_query), std::move(att.grad_key),
                       std::move(att.grad_value)};
}

}  // namespace crossview
