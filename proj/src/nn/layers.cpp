#include "topo/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>

namespace topo::nn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

std::string shape_string(const Tensor& t) {
  return std::to_string(t.channels()) + "x" + std::to_string(t.height()) + "x" + std::to_string(t.width());
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    fail(ErrorKind::shape, std::string(what) + ": shape " + shape_string(a) + " vs " + shape_string(b));
  }
}

// Rows are (channel, ky, kx), columns are output pixels.
Buffer im2col(const Tensor& x) {
  const int channels = x.channels();
  const int h = x.height();
  const int w = x.width();
  const size_t hw = x.plane();
  Buffer cols(static_cast<size_t>(channels) * 9 * hw);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < channels * 9; ++r) {
    const int c = r / 9;
    const int dy = (r % 9) / 3 - 1;
    const int dx = r % 3 - 1;
    const double* src = x.data() + c * hw;
    double* dst = cols.data() + r * hw;
    for (int y = 0; y < h; ++y) {
      double* row = dst + static_cast<size_t>(y) * w;
      const int sy = y + dy;
      if (sy < 0 || sy >= h) {
        std::fill(row, row + w, 0.0);
        continue;
      }
      const double* srow = src + static_cast<size_t>(sy) * w;
      const int x0 = std::max(0, -dx);
      const int x1 = std::min(w, w - dx);
      for (int xx = 0; xx < x0; ++xx) row[xx] = 0.0;
      for (int xx = x0; xx < x1; ++xx) row[xx] = srow[xx + dx];
      for (int xx = x1; xx < w; ++xx) row[xx] = 0.0;
    }
  }
  return cols;
}

void col2im(const double* cols, Tensor& out) {
  const int h = out.height();
  const int w = out.width();
  const size_t hw = out.plane();
#pragma omp parallel for schedule(static)
  for (int c = 0; c < out.channels(); ++c) {
    double* dst = out.data() + c * hw;
    for (int k = 0; k < 9; ++k) {
      const int dy = k / 3 - 1;
      const int dx = k % 3 - 1;
      const double* src = cols + (static_cast<size_t>(c) * 9 + k) * hw;
      for (int y = 0; y < h; ++y) {
        const int sy = y + dy;
        if (sy < 0 || sy >= h) continue;
        const double* row = src + static_cast<size_t>(y) * w;
        double* drow = dst + static_cast<size_t>(sy) * w;
        const int x0 = std::max(0, -dx);
        const int x1 = std::min(w, w - dx);
        for (int xx = x0; xx < x1; ++xx) drow[xx + dx] += row[xx];
      }
    }
  }
}

void check_conv_input(const Tensor& x, const ConvLayer& layer) {
  if (x.channels() != layer.in_channels) {
    fail(ErrorKind::shape, "conv2d: input has " + std::to_string(x.channels()) + " channels, layer expects " +
                               std::to_string(layer.in_channels));
  }
  if (x.height() < 1 || x.width() < 1) fail(ErrorKind::shape, "conv2d: empty spatial extent");
  if (layer.kernels.size() != static_cast<size_t>(layer.out_channels) * layer.in_channels * 9 ||
      layer.bias.size() != static_cast<size_t>(layer.out_channels)) {
    fail(ErrorKind::shape, "conv2d: kernel storage does not match (out, in, 3, 3)");
  }
}

}  // namespace

Tensor conv2d_forward(const Tensor& x, const ConvLayer& layer) {
  check_conv_input(x, layer);
  const int k = layer.out_channels;
  const auto hw = static_cast<Eigen::Index>(x.plane());
  const auto rows = static_cast<Eigen::Index>(layer.in_channels) * 9;
  const Buffer cols = im2col(x);

  Tensor out(k, x.height(), x.width());
  MatrixMap y(out.data(), k, hw);
  y.noalias() = ConstMatrixMap(layer.kernels.data(), k, rows) * ConstMatrixMap(cols.data(), rows, hw);
  y.colwise() += Eigen::Map<const Eigen::VectorXd>(layer.bias.data(), k);
  return out;
}

ConvGradients conv2d_backward(const Tensor& x, const ConvLayer& layer, const Tensor& grad_out,
                              bool input_gradient) {
  check_conv_input(x, layer);
  if (grad_out.channels() != layer.out_channels || grad_out.height() != x.height() ||
      grad_out.width() != x.width()) {
    fail(ErrorKind::shape, "conv2d backward: gradient shape " + shape_string(grad_out) + " inconsistent with input " +
                               shape_string(x));
  }
  const int k = layer.out_channels;
  const auto hw = static_cast<Eigen::Index>(x.plane());
  const auto rows = static_cast<Eigen::Index>(layer.in_channels) * 9;
  const Buffer cols = im2col(x);
  const ConstMatrixMap g(grad_out.data(), k, hw);
  const ConstMatrixMap colmat(cols.data(), rows, hw);

  ConvGradients grads;
  grads.bias.resize(k);
  Eigen::Map<Eigen::VectorXd>(grads.bias.data(), k) = g.rowwise().sum();
  grads.kernels.resize(static_cast<size_t>(k) * rows);
  MatrixMap(grads.kernels.data(), k, rows).noalias() = g * colmat.transpose();

  if (input_gradient) {
    Buffer grad_cols(static_cast<size_t>(rows) * hw);
    MatrixMap(grad_cols.data(), rows, hw).noalias() =
        ConstMatrixMap(layer.kernels.data(), k, rows).transpose() * g;
    grads.input = Tensor(x.channels(), x.height(), x.width());
    col2im(grad_cols.data(), grads.input);
  }
  return grads;
}

PoolResult maxpool2x2_forward(const Tensor& x) {
  if (x.height() % 2 != 0 || x.width() % 2 != 0) {
    fail(ErrorKind::shape, "maxpool2x2: spatial dims must be even, got " + shape_string(x));
  }
  const int ho = x.height() / 2;
  const int wo = x.width() / 2;
  PoolResult r{Tensor(x.channels(), ho, wo), std::vector<std::int32_t>(static_cast<size_t>(x.channels()) * ho * wo)};
#pragma omp parallel for schedule(static)
  for (int c = 0; c < x.channels(); ++c) {
    for (int y = 0; y < ho; ++y) {
      for (int xx = 0; xx < wo; ++xx) {
        const size_t base = c * x.plane() + static_cast<size_t>(2 * y) * x.width() + 2 * xx;
        const size_t cand[4] = {base, base + 1, base + x.width(), base + x.width() + 1};
        size_t best = cand[0];
        for (int i = 1; i < 4; ++i) {
          if (x[cand[i]] > x[best]) best = cand[i];
        }
        const size_t o = c * r.output.plane() + static_cast<size_t>(y) * wo + xx;
        r.output[o] = x[best];
        r.argmax[o] = static_cast<std::int32_t>(best);
      }
    }
  }
  return r;
}

Tensor maxpool2x2_backward(const Tensor& input_shape, std::span<const std::int32_t> argmax,
                           const Tensor& grad_out) {
  if (argmax.size() != grad_out.size()) fail(ErrorKind::shape, "maxpool2x2 backward: argmax/gradient size mismatch");
  Tensor g(input_shape.channels(), input_shape.height(), input_shape.width());
  for (size_t i = 0; i < grad_out.size(); ++i) g[static_cast<size_t>(argmax[i])] += grad_out[i];
  return g;
}

Tensor upsample2x_forward(const Tensor& x) {
  Tensor out(x.channels(), 2 * x.height(), 2 * x.width());
#pragma omp parallel for schedule(static)
  for (int c = 0; c < x.channels(); ++c) {
    for (int y = 0; y < out.height(); ++y) {
      for (int xx = 0; xx < out.width(); ++xx) out(c, y, xx) = x(c, y / 2, xx / 2);
    }
  }
  return out;
}

Tensor upsample2x_backward(const Tensor& grad_out) {
  if (grad_out.height() % 2 != 0 || grad_out.width() % 2 != 0) {
    fail(ErrorKind::shape, "upsample2x backward: odd gradient extent");
  }
  Tensor g(grad_out.channels(), grad_out.height() / 2, grad_out.width() / 2);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < grad_out.channels(); ++c) {
    for (int y = 0; y < grad_out.height(); ++y) {
      for (int xx = 0; xx < grad_out.width(); ++xx) g(c, y / 2, xx / 2) += grad_out(c, y, xx);
    }
  }
  return g;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    fail(ErrorKind::shape, "concat: spatial mismatch " + shape_string(a) + " vs " + shape_string(b));
  }
  Tensor out(a.channels() + b.channels(), a.height(), a.width());
  std::copy(a.values().begin(), a.values().end(), out.data());
  std::copy(b.values().begin(), b.values().end(), out.data() + a.size());
  return out;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& x, int first_channels) {
  if (first_channels < 0 || first_channels > x.channels()) fail(ErrorKind::shape, "split: channel count out of range");
  Tensor a(first_channels, x.height(), x.width());
  Tensor b(x.channels() - first_channels, x.height(), x.width());
  std::copy(x.data(), x.data() + a.size(), a.data());
  std::copy(x.data() + a.size(), x.data() + x.size(), b.data());
  return {std::move(a), std::move(b)};
}

Tensor relu_forward(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& output, const Tensor& grad_out) {
  require_same_shape(output, grad_out, "relu backward");
  Tensor g = grad_out;
  for (size_t i = 0; i < g.size(); ++i) {
    if (!(output[i] > 0.0)) g[i] = 0.0;
  }
  return g;
}

Tensor sigmoid_forward(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values()) v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  return y;
}

Tensor sigmoid_backward(const Tensor& output, const Tensor& grad_out) {
  require_same_shape(output, grad_out, "sigmoid backward");
  Tensor g = grad_out;
  for (size_t i = 0; i < g.size(); ++i) g[i] *= output[i] * (1.0 - output[i]);
  return g;
}

DropoutResult dropout_forward(const Tensor& x, double rate, Mode mode, std::mt19937_64& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) fail(ErrorKind::invalid_parameter, "dropout rate must lie in [0, 1)");
  if (mode == Mode::infer || rate == 0.0) return {x, Tensor()};
  DropoutResult r{x, Tensor(x.channels(), x.height(), x.width())};
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  for (size_t i = 0; i < x.size(); ++i) {
    r.scale[i] = keep(rng) ? scale : 0.0;
    r.output[i] *= r.scale[i];
  }
  return r;
}

Tensor dropout_backward(const Tensor& scale, const Tensor& grad_out) {
  if (scale.size() == 0) return grad_out;
  require_same_shape(scale, grad_out, "dropout backward");
  Tensor g = grad_out;
  for (size_t i = 0; i < g.size(); ++i) g[i] *= scale[i];
  return g;
}

}  // namespace topo::nn
