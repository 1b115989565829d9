#include "topo/toponet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace topo::net {

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.parameter_count();
  return n;
}

NetworkParams NetworkParams::zeros() {
  NetworkParams p;
  for (int i = 0; i < kLayerCount; ++i) {
    p.layers[i] = ConvLayer(kArchitecture[i].out_channels, kArchitecture[i].in_channels);
  }
  return p;
}

NetworkParams build_network(std::uint64_t seed) {
  NetworkParams p = NetworkParams::zeros();
  std::mt19937_64 rng(seed);
  for (auto& layer : p.layers) {
    const double fan_in = 9.0 * layer.in_channels;
    const double fan_out = 9.0 * layer.out_channels;
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : layer.kernels) w = dist(rng);
  }
  return p;
}

void check_input_shape(int height, int width) {
  if (height < 4 || width < 4 || height % 4 != 0 || width % 4 != 0) {
    fail(ErrorKind::shape, "network input " + std::to_string(height) + "x" + std::to_string(width) +
                               ": height and width must be divisible by 4");
  }
}

namespace {

Tensor conv_relu(const NetworkParams& p, Activations& a, int layer, Tensor in) {
  a.conv_out[layer] = nn::relu_forward(nn::conv2d_forward(in, p[layer]));
  a.conv_in[layer] = std::move(in);
  return a.conv_out[layer];
}

void accumulate(ConvLayer& dst, nn::ConvGradients&& g) {
  dst.kernels = std::move(g.kernels);
  dst.bias = std::move(g.bias);
}

}  // namespace

Activations forward_pass(const NetworkParams& params, const Tensor& input, const ForwardOptions& options) {
  if (input.channels() != 2) fail(ErrorKind::shape, "network input must have 2 channels");
  check_input_shape(input.height(), input.width());
  const bool dropping = options.mode == Mode::train && options.dropout_rate > 0.0;
  if (dropping && options.rng == nullptr) fail(ErrorKind::invalid_parameter, "train-mode dropout needs a generator");
  std::mt19937_64 unused;
  std::mt19937_64& rng = options.rng ? *options.rng : unused;

  Activations a;
  a.input = input;
  Tensor t = conv_relu(params, a, enc16a, input);
  t = conv_relu(params, a, enc16b, std::move(t));

  auto pool1 = nn::maxpool2x2_forward(t);
  a.pool1_in = t;
  a.pool1_argmax = std::move(pool1.argmax);
  auto drop1 = nn::dropout_forward(pool1.output, options.dropout_rate, options.mode, rng);
  a.drop1_scale = std::move(drop1.scale);
  t = conv_relu(params, a, enc32a, std::move(drop1.output));
  t = conv_relu(params, a, enc32b, std::move(t));

  auto pool2 = nn::maxpool2x2_forward(t);
  a.pool2_in = t;
  a.pool2_argmax = std::move(pool2.argmax);
  auto drop2 = nn::dropout_forward(pool2.output, options.dropout_rate, options.mode, rng);
  a.drop2_scale = std::move(drop2.scale);
  t = conv_relu(params, a, enc64a, std::move(drop2.output));
  t = conv_relu(params, a, enc64b, std::move(t));
  t = conv_relu(params, a, dec64a, std::move(t));
  t = conv_relu(params, a, dec64b, std::move(t));

  t = nn::concat_channels(nn::upsample2x_forward(t), a.conv_out[enc32b]);
  t = conv_relu(params, a, dec32a, std::move(t));
  t = conv_relu(params, a, dec32b, std::move(t));

  t = nn::concat_channels(nn::upsample2x_forward(t), a.conv_out[enc16b]);
  t = conv_relu(params, a, dec16a, std::move(t));
  t = conv_relu(params, a, dec16b, std::move(t));

  a.conv_in[out1] = t;
  a.conv_out[out1] = nn::conv2d_forward(t, params[out1]);
  a.prediction = nn::sigmoid_forward(a.conv_out[out1]);
  return a;
}

Tensor forward(const NetworkParams& params, const Tensor& input, const ForwardOptions& options) {
  return forward_pass(params, input, options).prediction;
}

fem::DensityField predict(const NetworkParams& params, const fem::DensityField& density,
                          const fem::DensityField& update) {
  if (density.nely != update.nely || density.nelx != update.nelx) {
    fail(ErrorKind::shape, "density and update fields differ in shape");
  }
  Tensor in(2, density.nely, density.nelx);
  std::copy(density.values.begin(), density.values.end(), in.channel(0).begin());
  std::copy(update.values.begin(), update.values.end(), in.channel(1).begin());
  const Tensor out = forward(params, in);
  fem::DensityField f(density.nely, density.nelx);
  std::copy(out.values().begin(), out.values().end(), f.values.begin());
  return f;
}

NetworkParams backward(const NetworkParams& params, const Activations& a, const Tensor& grad_prediction) {
  if (!grad_prediction.same_shape(a.prediction)) fail(ErrorKind::shape, "prediction gradient shape mismatch");
  NetworkParams grads;

  auto through_conv = [&](int layer, const Tensor& grad_out, bool post_relu, bool need_input = true) {
    const Tensor g = post_relu ? nn::relu_backward(a.conv_out[layer], grad_out) : grad_out;
    auto cg = nn::conv2d_backward(a.conv_in[layer], params[layer], g, need_input);
    Tensor gin = std::move(cg.input);
    grads[layer] = ConvLayer();
    grads[layer].out_channels = params[layer].out_channels;
    grads[layer].in_channels = params[layer].in_channels;
    accumulate(grads[layer], std::move(cg));
    return gin;
  };

  Tensor g = nn::sigmoid_backward(a.prediction, grad_prediction);
  g = through_conv(out1, g, false);
  g = through_conv(dec16b, g, true);
  g = through_conv(dec16a, g, true);
  auto [g_up2, g_skip16] = nn::split_channels(g, params[dec32b].out_channels);
  g = nn::upsample2x_backward(g_up2);
  g = through_conv(dec32b, g, true);
  g = through_conv(dec32a, g, true);
  auto [g_up1, g_skip32] = nn::split_channels(g, params[dec64b].out_channels);
  g = nn::upsample2x_backward(g_up1);
  g = through_conv(dec64b, g, true);
  g = through_conv(dec64a, g, true);
  g = through_conv(enc64b, g, true);
  g = through_conv(enc64a, g, true);
  g = nn::dropout_backward(a.drop2_scale, g);
  g = nn::maxpool2x2_backward(a.pool2_in, a.pool2_argmax, g);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += g_skip32[i];
  g = through_conv(enc32b, g, true);
  g = through_conv(enc32a, g, true);
  g = nn::dropout_backward(a.drop1_scale, g);
  g = nn::maxpool2x2_backward(a.pool1_in, a.pool1_argmax, g);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += g_skip16[i];
  g = through_conv(enc16b, g, true);
  through_conv(enc16a, g, true, false);
  return grads;
}

LossValue loss(const Tensor& pred, const Tensor& target, double beta) {
  if (!pred.same_shape(target)) fail(ErrorKind::shape, "loss: prediction and target shapes differ");
  if (pred.size() == 0) fail(ErrorKind::shape, "loss: empty tensors");
  const double n = static_cast<double>(pred.size());
  double bce = 0.0;
  double mp = 0.0;
  double mt = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(pred[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    const double t = target[i];
    bce -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    mp += pred[i];
    mt += t;
  }
  LossValue v;
  v.confidence = bce / n;
  const double diff = mp / n - mt / n;
  v.volume = diff * diff;
  v.total = v.confidence + beta * v.volume;
  return v;
}

Tensor loss_backward(const Tensor& pred, const Tensor& target, double beta) {
  if (!pred.same_shape(target)) fail(ErrorKind::shape, "loss: prediction and target shapes differ");
  const double n = static_cast<double>(pred.size());
  double mp = 0.0;
  double mt = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    mp += pred[i];
    mt += target[i];
  }
  const double volume_grad = beta * 2.0 * (mp - mt) / n / n;
  Tensor g(pred.channels(), pred.height(), pred.width());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(pred[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    const double t = target[i];
    g[i] = (-t / p + (1.0 - t) / (1.0 - p)) / n + volume_grad;
  }
  return g;
}

}  // namespace topo::net
