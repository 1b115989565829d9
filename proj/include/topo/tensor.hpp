#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "topo/error.hpp"

namespace topo::nn {

// Storage aligned to Eigen's maximum packet size. Vectorized reductions and
// matrix-vector products peel leading elements up to an aligned address, so
// a fixed alignment keeps their summation order, and results, reproducible.
using Buffer = std::vector<double, Eigen::aligned_allocator<double>>;

// Dense channels x height x width array, row-major within a channel.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int channels, int height, int width, double fill = 0.0)
      : c_(channels), h_(height), w_(width),
        data_(static_cast<size_t>(channels) * height * width, fill) {
    if (channels < 0 || height < 0 || width < 0) fail(ErrorKind::shape, "negative tensor extent");
  }

  int channels() const { return c_; }
  int height() const { return h_; }
  int width() const { return w_; }
  size_t size() const { return data_.size(); }
  size_t plane() const { return static_cast<size_t>(h_) * w_; }

  double& operator()(int c, int y, int x) { return data_[(c * plane()) + static_cast<size_t>(y) * w_ + x]; }
  double operator()(int c, int y, int x) const { return data_[(c * plane()) + static_cast<size_t>(y) * w_ + x]; }
  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::span<double> channel(int c) { return {data_.data() + c * plane(), plane()}; }
  std::span<const double> channel(int c) const { return {data_.data() + c * plane(), plane()}; }

  bool same_shape(const Tensor& o) const { return c_ == o.c_ && h_ == o.h_ && w_ == o.w_; }
  bool operator==(const Tensor&) const = default;

 private:
  int c_ = 0;
  int h_ = 0;
  int w_ = 0;
  Buffer data_;
};

}  // namespace topo::nn
