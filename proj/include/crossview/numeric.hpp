#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <span>
#include <thread>
#include <utility>
#include <vector>

namespace crossview {

// Correctly-rounded summation of doubles (Shewchuk partials, as used by
// Python's math.fsum). The result equals the exact real-number sum rounded
// once, so it does not depend on the order in which terms are added. The
// attention reductions rely on this for exact permutation equivariance.
class ExactSum {
 public:
  void add(double x) {
    if (!std::isfinite(x)) {
      special_ += x;
      return;
    }
    std::size_t keep = 0;
    for (std::size_t j = 0; j < partials_.size(); ++j) {
      double y = partials_[j];
      if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
      double hi = x + y;
      double lo = y - (hi - x);
      if (lo != 0.0) partials_[keep++] = lo;
      x = hi;
    }
    partials_.resize(keep);
    partials_.push_back(x);
  }

  // a*b added exactly via a two-product split.
  void add_product(double a, double b) {
    double p = a * b;
    add(p);
    if (std::isfinite(p)) add(std::fma(a, b, -p));
  }

  double result() const {
    if (special_ != 0.0 || std::isnan(special_)) return special_;
    if (partials_.empty()) return 0.0;
    // Partials are non-overlapping and sorted by increasing magnitude.
    // Round from the top, then fix up half-even ties against the tail.
    std::size_t n = partials_.size();
    double hi = partials_[--n];
    double lo = 0.0;
    while (n > 0) {
      double x = hi;
      double y = partials_[--n];
      hi = x + y;
      double yr = hi - x;
      lo = y - yr;
      if (lo != 0.0) break;
    }
    if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) ||
                  (lo > 0.0 && partials_[n - 1] > 0.0))) {
      double y = lo * 2.0;
      double x = hi + y;
      if (y == x - hi) hi = x;
    }
    return hi;
  }

  void reset() {
    partials_.clear();
    special_ = 0.0;
  }

 private:
  std::vector<double> partials_;
  double special_ = 0.0;
};

inline double exact_sum(std::span<const double> values) {
  ExactSum acc;
  for (double v : values) acc.add(v);
  return acc.result();
}

// Correctly-rounded dot product; order-invariant like ExactSum.
inline double exact_dot(std::span<const double> a, std::span<const double> b) {
  ExactSum acc;
  for (std::size_t i = 0; i < a.size(); ++i) acc.add_product(a[i], b[i]);
  return acc.result();
}

// Worker count for data-parallel pixel loops. Controlled by the
// CROSSVIEW_THREADS environment variable; defaults to 1 so results and
// timings are reproducible unless the user opts in.
inline int thread_count() {
  static const int n = [] {
    if (const char* s = std::getenv("CROSSVIEW_THREADS")) {
      int v = std::atoi(s);
      if (v >= 1) return v;
    }
    return 1;
  }();
  return n;
}

// Runs fn(i) for i in [begin, end). Only safe for bodies whose writes are
// disjoint per index; reductions must stay sequential to keep a fixed
// summation order.
template <typename F>
void parallel_for(int begin, int end, F&& fn) {
  const int count = end - begin;
  const int workers = std::min(thread_count(), count);
  if (workers <= 1) {
    for (int i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int chunk = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int lo = begin + w * chunk;
    const int hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace crossview
