#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace crossview {

// Error hierarchy. Validation failures throw; degenerate-but-legitimate
// situations (empty CGT mask, uniform layout mask) are reported via flags
// on the result structs instead.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct NonPositiveDepth : Error {
  using Error::Error;
};
struct DegenerateHomography : Error {
  using Error::Error;
};
struct DimensionMismatch : Error {
  using Error::Error;
};
struct ShapeMismatch : Error {
  using Error::Error;
};
struct EmptyValidRegion : Error {
  using Error::Error;
};
struct NoValidPixels : Error {
  using Error::Error;
};
struct TrajectoryTooShort : Error {
  using Error::Error;
};
struct NonFiniteValue : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

// Dense row-major 2-D grid.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
    assert(rows >= 0 && cols >= 0);
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int r, int c) {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  const T& operator()(int r, int c) const {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  template <typename U>
  bool same_shape(const Grid<U>& other) const {
    return rows_ == other.rows() && cols_ == other.cols();
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

// Dense row-major 3-D grid (height x width x channels).
template <typename T>
class Grid3 {
 public:
  Grid3() = default;
  Grid3(int height, int width, int channels, T fill = T{})
      : h_(height),
        w_(width),
        c_(channels),
        data_(static_cast<std::size_t>(height) * width * channels, fill) {
    assert(height >= 0 && width >= 0 && channels >= 0);
  }

  int height() const { return h_; }
  int width() const { return w_; }
  int channels() const { return c_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(int r, int c, int k) {
    assert(r >= 0 && r < h_ && c >= 0 && c < w_ && k >= 0 && k < c_);
    return data_[(static_cast<std::size_t>(r) * w_ + c) * c_ + k];
  }
  const T& operator()(int r, int c, int k) const {
    assert(r >= 0 && r < h_ && c >= 0 && c < w_ && k >= 0 && k < c_);
    return data_[(static_cast<std::size_t>(r) * w_ + c) * c_ + k];
  }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  template <typename U>
  bool same_shape(const Grid3<U>& other) const {
    return h_ == other.height() && w_ == other.width() &&
           c_ == other.channels();
  }

 private:
  int h_ = 0;
  int w_ = 0;
  int c_ = 0;
  std::vector<T> data_;
};

using Mask = Grid<std::uint8_t>;

}  // namespace crossview
