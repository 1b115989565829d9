#pragma once

// Serial loop-nest kernels. They define the expected results for the
// parallel kernels in topo/layers.hpp and serve as the benchmark baseline.

#include "topo/layers.hpp"

namespace topo::nn::reference {

Tensor conv2d_forward(const Tensor& x, const ConvLayer& layer);
ConvGradients conv2d_backward(const Tensor& x, const ConvLayer& layer, const Tensor& grad_out);
PoolResult maxpool2x2_forward(const Tensor& x);
Tensor upsample2x_forward(const Tensor& x);

}  // namespace topo::nn::reference
