#pragma once

// Encoder-decoder network mapping (density, last update) to a predicted final
// structure.
//
//   in(2) -> 16 -> 16 ---------------------------------------------+ skip
//            pool, dropout -> 32 -> 32 -----------------------+ skip |
//                         pool, dropout -> 64 -> 64 -> 64 -> 64     |
//                                          up, concat(+32) -> 32 -> 32
//                                                       up, concat(+16) -> 16 -> 16 -> 1, sigmoid
//
// All convolutions are 3x3 same-padded followed by ReLU, except the last
// which feeds the sigmoid. Total trainable scalars: 192,113.

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "topo/fem.hpp"
#include "topo/layers.hpp"

namespace topo::net {

using nn::ConvLayer;
using nn::Mode;
using nn::Tensor;

inline constexpr int kLayerCount = 13;
inline constexpr std::size_t kParameterCount = 192113;

struct LayerSpec {
  std::string_view name;
  int out_channels;
  int in_channels;
};

inline constexpr std::array<LayerSpec, kLayerCount> kArchitecture = {{
    {"enc16a", 16, 2},  {"enc16b", 16, 16}, {"enc32a", 32, 16}, {"enc32b", 32, 32},
    {"enc64a", 64, 32}, {"enc64b", 64, 64}, {"dec64a", 64, 64}, {"dec64b", 64, 64},
    {"dec32a", 32, 96}, {"dec32b", 32, 32}, {"dec16a", 16, 48}, {"dec16b", 16, 16},
    {"out1", 1, 16},
}};

enum Layer : int {
  enc16a, enc16b, enc32a, enc32b, enc64a, enc64b,
  dec64a, dec64b, dec32a, dec32b, dec16a, dec16b, out1,
};

struct NetworkParams {
  std::array<ConvLayer, kLayerCount> layers;

  ConvLayer& operator[](int i) { return layers[i]; }
  const ConvLayer& operator[](int i) const { return layers[i]; }
  std::size_t parameter_count() const;

  // Zero-filled container with the architecture's shapes (used for gradients).
  static NetworkParams zeros();
};

// Glorot-uniform kernels, zero biases.
NetworkParams build_network(std::uint64_t seed);

// Intermediate values kept for the backward pass.
struct Activations {
  Tensor input;
  std::array<Tensor, kLayerCount> conv_in;   // input to each convolution
  std::array<Tensor, kLayerCount> conv_out;  // post-activation output
  std::vector<std::int32_t> pool1_argmax, pool2_argmax;
  Tensor pool1_in, pool2_in;
  Tensor drop1_scale, drop2_scale;
  Tensor prediction;  // 1 x H x W, values in (0, 1)
};

struct ForwardOptions {
  Mode mode = Mode::infer;
  double dropout_rate = 0.25;
  std::mt19937_64* rng = nullptr;  // required in train mode with a nonzero rate
};

// input: 2 x H x W with H and W divisible by 4.
Activations forward_pass(const NetworkParams& params, const Tensor& input, const ForwardOptions& options = {});
Tensor forward(const NetworkParams& params, const Tensor& input, const ForwardOptions& options = {});

// Inference on a density field and its last update; returns the predicted
// material probability per element.
fem::DensityField predict(const NetworkParams& params, const fem::DensityField& density,
                          const fem::DensityField& update);

// Gradients of sum(grad_prediction * prediction) with respect to every parameter.
NetworkParams backward(const NetworkParams& params, const Activations& acts, const Tensor& grad_prediction);

struct LossValue {
  double total = 0.0;
  double confidence = 0.0;  // binary cross-entropy
  double volume = 0.0;      // (mean(pred) - mean(target))^2
};

inline constexpr double kProbabilityClamp = 1e-7;

// L = BCE(target, pred) + beta * (mean(pred) - mean(target))^2, with pred
// clamped to [1e-7, 1 - 1e-7] inside the logarithms.
LossValue loss(const Tensor& pred, const Tensor& target, double beta);
Tensor loss_backward(const Tensor& pred, const Tensor& target, double beta);

void check_input_shape(int height, int width);

}  // namespace topo::net
