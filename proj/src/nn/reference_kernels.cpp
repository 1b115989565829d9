#include "topo/reference_kernels.hpp"

namespace topo::nn::reference {

Tensor conv2d_forward(const Tensor& x, const ConvLayer& layer) {
  if (x.channels() != layer.in_channels) fail(ErrorKind::shape, "reference conv2d: channel mismatch");
  const int h = x.height();
  const int w = x.width();
  Tensor out(layer.out_channels, h, w);
  for (int k = 0; k < layer.out_channels; ++k) {
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        double acc = layer.bias[k];
        for (int c = 0; c < layer.in_channels; ++c) {
          for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
              const int sy = y + i - 1;
              const int sx = xx + j - 1;
              if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
              acc += layer.kernel(k, c, i, j) * x(c, sy, sx);
            }
          }
        }
        out(k, y, xx) = acc;
      }
    }
  }
  return out;
}

ConvGradients conv2d_backward(const Tensor& x, const ConvLayer& layer, const Tensor& grad_out) {
  if (x.channels() != layer.in_channels) fail(ErrorKind::shape, "reference conv2d: channel mismatch");
  const int h = x.height();
  const int w = x.width();
  ConvGradients g;
  g.input = Tensor(x.channels(), h, w);
  g.kernels.assign(layer.kernels.size(), 0.0);
  g.bias.assign(layer.bias.size(), 0.0);
  for (int k = 0; k < layer.out_channels; ++k) {
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        const double go = grad_out(k, y, xx);
        g.bias[k] += go;
        for (int c = 0; c < layer.in_channels; ++c) {
          for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
              const int sy = y + i - 1;
              const int sx = xx + j - 1;
              if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
              g.kernels[((static_cast<size_t>(k) * layer.in_channels + c) * 3 + i) * 3 + j] += go * x(c, sy, sx);
              g.input(c, sy, sx) += go * layer.kernel(k, c, i, j);
            }
          }
        }
      }
    }
  }
  return g;
}

PoolResult maxpool2x2_forward(const Tensor& x) {
  if (x.height() % 2 != 0 || x.width() % 2 != 0) fail(ErrorKind::shape, "reference maxpool: odd extent");
  const int ho = x.height() / 2;
  const int wo = x.width() / 2;
  PoolResult r{Tensor(x.channels(), ho, wo), std::vector<std::int32_t>(static_cast<size_t>(x.channels()) * ho * wo)};
  size_t o = 0;
  for (int c = 0; c < x.channels(); ++c) {
    for (int y = 0; y < ho; ++y) {
      for (int xx = 0; xx < wo; ++xx, ++o) {
        double best = x(c, 2 * y, 2 * xx);
        int by = 2 * y;
        int bx = 2 * xx;
        for (int i = 0; i < 2; ++i) {
          for (int j = 0; j < 2; ++j) {
            if (x(c, 2 * y + i, 2 * xx + j) > best) {
              best = x(c, 2 * y + i, 2 * xx + j);
              by = 2 * y + i;
              bx = 2 * xx + j;
            }
          }
        }
        r.output[o] = best;
        r.argmax[o] = static_cast<std::int32_t>(c * x.plane() + static_cast<size_t>(by) * x.width() + bx);
      }
    }
  }
  return r;
}

Tensor upsample2x_forward(const Tensor& x) {
  Tensor out(x.channels(), 2 * x.height(), 2 * x.width());
  for (int c = 0; c < x.channels(); ++c)
    for (int y = 0; y < x.height(); ++y)
      for (int xx = 0; xx < x.width(); ++xx)
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) out(c, 2 * y + i, 2 * xx + j) = x(c, y, xx);
  return out;
}

}  // namespace topo::nn::reference
