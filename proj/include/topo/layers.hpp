#pragma once

// Forward and backward passes of the layers used by the segmentation network.
// The conv and pooling kernels here are the OpenMP/GEMM versions; serial
// loop-nest equivalents live in topo/reference_kernels.hpp.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "topo/tensor.hpp"

namespace topo::nn {

// 3x3 convolution kernels, stored (out, in, 3, 3) row-major.
struct ConvLayer {
  int out_channels = 0;
  int in_channels = 0;
  Buffer kernels;
  Buffer bias;

  ConvLayer() = default;
  ConvLayer(int out, int in)
      : out_channels(out), in_channels(in), kernels(static_cast<size_t>(out) * in * 9, 0.0), bias(out, 0.0) {}

  double& kernel(int k, int c, int i, int j) { return kernels[((static_cast<size_t>(k) * in_channels + c) * 3 + i) * 3 + j]; }
  double kernel(int k, int c, int i, int j) const { return kernels[((static_cast<size_t>(k) * in_channels + c) * 3 + i) * 3 + j]; }
  size_t parameter_count() const { return kernels.size() + bias.size(); }
};

struct ConvGradients {
  Tensor input;  // empty when not requested
  Buffer kernels;
  Buffer bias;
};

// Same-padded (zero) 3x3 convolution, stride 1.
Tensor conv2d_forward(const Tensor& x, const ConvLayer& layer);
ConvGradients conv2d_backward(const Tensor& x, const ConvLayer& layer, const Tensor& grad_out,
                              bool input_gradient = true);

struct PoolResult {
  Tensor output;
  std::vector<std::int32_t> argmax;  // flat input index per output element
};

// Disjoint 2x2 windows; ties go to the first element in row-major order.
PoolResult maxpool2x2_forward(const Tensor& x);
Tensor maxpool2x2_backward(const Tensor& input_shape, std::span<const std::int32_t> argmax,
                           const Tensor& grad_out);

// Nearest-neighbour 2x upsampling; backward sums each 2x2 block.
Tensor upsample2x_forward(const Tensor& x);
Tensor upsample2x_backward(const Tensor& grad_out);

Tensor concat_channels(const Tensor& a, const Tensor& b);
// Splits along channels; first part gets `first_channels` channels.
std::pair<Tensor, Tensor> split_channels(const Tensor& x, int first_channels);

Tensor relu_forward(const Tensor& x);
// Uses the forward output: gradient passes where output > 0.
Tensor relu_backward(const Tensor& output, const Tensor& grad_out);

Tensor sigmoid_forward(const Tensor& x);
Tensor sigmoid_backward(const Tensor& output, const Tensor& grad_out);

enum class Mode { train, infer };

struct DropoutResult {
  Tensor output;
  Tensor scale;  // per element 0 or 1 / (1 - rate); empty in infer mode
};

// Inverted dropout.
DropoutResult dropout_forward(const Tensor& x, double rate, Mode mode, std::mt19937_64& rng);
Tensor dropout_backward(const Tensor& scale, const Tensor& grad_out);

}  // namespace topo::nn
