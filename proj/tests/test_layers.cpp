#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles/gradcheck.hpp"
#include "oracles/naive_nn.hpp"
#include "topo/adam.hpp"
#include "topo/layers.hpp"
#include "topo/reference_kernels.hpp"

using namespace topo;
using namespace topo::nn;

namespace {

Tensor random_tensor(int c, int h, int w, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor t(c, h, w);
  for (double& v : t.values()) v = d(rng);
  return t;
}

ConvLayer random_conv(int out, int in, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-0.5, 0.5);
  ConvLayer l(out, in);
  for (double& v : l.kernels) v = d(rng);
  for (double& v : l.bias) v = d(rng);
  return l;
}

oracle::Volume to_volume(const Tensor& t) {
  auto v = oracle::volume(t.channels(), t.height(), t.width());
  for (int c = 0; c < t.channels(); ++c)
    for (int y = 0; y < t.height(); ++y)
      for (int x = 0; x < t.width(); ++x) v[c][y][x] = t(c, y, x);
  return v;
}

oracle::Kernels to_kernels(const ConvLayer& l) {
  oracle::Kernels k(l.out_channels, std::vector(l.in_channels, std::vector(3, std::vector<double>(3))));
  for (int o = 0; o < l.out_channels; ++o)
    for (int c = 0; c < l.in_channels; ++c)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) k[o][c][i][j] = l.kernel(o, c, i, j);
  return k;
}

double dot(const Tensor& a, const Tensor& b) {
  return std::inner_product(a.values().begin(), a.values().end(), b.values().begin(), 0.0);
}

void expect_matches(const Tensor& t, const oracle::Volume& v, double tol) {
  ASSERT_EQ(t.channels(), static_cast<int>(v.size()));
  for (int c = 0; c < t.channels(); ++c)
    for (int y = 0; y < t.height(); ++y)
      for (int x = 0; x < t.width(); ++x) ASSERT_NEAR(t(c, y, x), v[c][y][x], tol) << c << "," << y << "," << x;
}

}  // namespace

// ---- convolution

TEST(Conv, ZeroKernelsGiveBias) {
  ConvLayer l(3, 2);
  l.bias = {0.5, -1.0, 2.0};
  std::mt19937_64 rng(1);
  const Tensor y = conv2d_forward(random_tensor(2, 5, 6, rng), l);
  for (int k = 0; k < 3; ++k)
    for (double v : y.channel(k)) EXPECT_EQ(v, l.bias[k]);
}

TEST(Conv, CenterDeltaIsIdentity) {
  ConvLayer l(1, 2);
  l.kernel(0, 1, 1, 1) = 1.0;
  std::mt19937_64 rng(2);
  const Tensor x = random_tensor(2, 4, 7, rng);
  const Tensor y = conv2d_forward(x, l);
  for (int i = 0; i < 28; ++i) EXPECT_EQ(y.channel(0)[i], x.channel(1)[i]);
}

TEST(Conv, MatchesLoopOracle) {
  std::mt19937_64 rng(3);
  const Tensor x = random_tensor(2, 5, 5, rng);
  const ConvLayer l = random_conv(3, 2, rng);
  const auto expect = oracle::conv_same(to_volume(x), to_kernels(l), l.bias);
  expect_matches(conv2d_forward(x, l), expect, 1e-12);
  expect_matches(reference::conv2d_forward(x, l), expect, 1e-12);
}

TEST(Conv, MatchesLoopOracleAcrossShapes) {
  std::mt19937_64 rng(4);
  for (auto [c, k, h, w] : {std::array{1, 1, 1, 1}, {3, 5, 2, 9}, {16, 8, 8, 8}, {4, 2, 12, 4}}) {
    const Tensor x = random_tensor(c, h, w, rng);
    const ConvLayer l = random_conv(k, c, rng);
    expect_matches(conv2d_forward(x, l), oracle::conv_same(to_volume(x), to_kernels(l), l.bias), 1e-12);
  }
}

TEST(Conv, ChannelMismatchIsShapeError) {
  std::mt19937_64 rng(5);
  try {
    conv2d_forward(random_tensor(3, 4, 4, rng), ConvLayer(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::shape);
  }
  EXPECT_THROW(conv2d_backward(random_tensor(2, 4, 4, rng), ConvLayer(2, 2), Tensor(2, 4, 5)), Error);
}

TEST(ConvBackward, BiasGradientIsReduction) {
  std::mt19937_64 rng(6);
  const Tensor x = random_tensor(2, 4, 4, rng);
  const ConvLayer l = random_conv(3, 2, rng);
  const Tensor g = random_tensor(3, 4, 4, rng);
  const auto grads = conv2d_backward(x, l, g);
  for (int k = 0; k < 3; ++k) {
    const auto ch = g.channel(k);
    EXPECT_NEAR(grads.bias[k], std::accumulate(ch.begin(), ch.end(), 0.0), 1e-12);
  }
}

TEST(ConvBackward, ZeroUpstreamGivesZero) {
  std::mt19937_64 rng(7);
  const Tensor x = random_tensor(2, 4, 4, rng);
  const auto grads = conv2d_backward(x, random_conv(3, 2, rng), Tensor(3, 4, 4));
  for (double v : grads.input.values()) EXPECT_EQ(v, 0.0);
  for (double v : grads.kernels) EXPECT_EQ(v, 0.0);
  for (double v : grads.bias) EXPECT_EQ(v, 0.0);
}

TEST(ConvBackward, MatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  for (auto [c, k, h, w] : {std::array{2, 3, 4, 4}, {1, 2, 3, 5}, {4, 4, 6, 2}}) {
    Tensor x = random_tensor(c, h, w, rng);
    ConvLayer l = random_conv(k, c, rng);
    const Tensor g = random_tensor(k, h, w, rng);
    const auto grads = conv2d_backward(x, l, g);
    auto f = [&] { return dot(g, conv2d_forward(x, l)); };
    EXPECT_LT(oracle::relative_error(grads.input.values(), oracle::numeric_gradient(x.values(), f)), 1e-5);
    EXPECT_LT(oracle::relative_error(grads.kernels, oracle::numeric_gradient(l.kernels, f)), 1e-5);
    EXPECT_LT(oracle::relative_error(grads.bias, oracle::numeric_gradient(l.bias, f)), 1e-5);
    const auto ref = reference::conv2d_backward(x, l, g);
    EXPECT_LT(oracle::relative_error(grads.input.values(), ref.input.values()), 1e-12);
    EXPECT_LT(oracle::relative_error(grads.kernels, ref.kernels), 1e-12);
  }
}

TEST(ConvBackward, InputGradientCanBeSkipped) {
  std::mt19937_64 rng(9);
  const Tensor x = random_tensor(2, 4, 4, rng);
  const ConvLayer l = random_conv(3, 2, rng);
  const Tensor g = random_tensor(3, 4, 4, rng);
  const auto full = conv2d_backward(x, l, g);
  const auto partial = conv2d_backward(x, l, g, false);
  EXPECT_EQ(partial.input.size(), 0u);
  EXPECT_EQ(partial.kernels, full.kernels);
  EXPECT_EQ(partial.bias, full.bias);
}

// ---- pooling

TEST(MaxPool, ConstantInput) {
  const auto r = maxpool2x2_forward(Tensor(2, 4, 6, 3.5));
  EXPECT_EQ(r.output.height(), 2);
  EXPECT_EQ(r.output.width(), 3);
  for (double v : r.output.values()) EXPECT_EQ(v, 3.5);
  // Ties resolve to the top-left of each window.
  EXPECT_EQ(r.argmax[0], 0);
  EXPECT_EQ(r.argmax[1], 2);
}

TEST(MaxPool, TwoByTwoExample) {
  Tensor x(1, 2, 2);
  x[0] = 1, x[1] = 2, x[2] = 3, x[3] = 4;
  const auto r = maxpool2x2_forward(x);
  EXPECT_EQ(r.output[0], 4.0);
  EXPECT_EQ(r.argmax[0], 3);
}

TEST(MaxPool, MatchesWindowScan) {
  std::mt19937_64 rng(10);
  const Tensor x = random_tensor(3, 8, 8, rng);
  const auto expect = oracle::max_pool(to_volume(x));
  expect_matches(maxpool2x2_forward(x).output, expect, 0.0);
  expect_matches(reference::maxpool2x2_forward(x).output, expect, 0.0);
  EXPECT_EQ(maxpool2x2_forward(x).argmax, reference::maxpool2x2_forward(x).argmax);
}

TEST(MaxPool, OddDimsAreShapeError) {
  try {
    maxpool2x2_forward(Tensor(1, 3, 4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::shape);
  }
  EXPECT_THROW(maxpool2x2_forward(Tensor(1, 4, 5)), Error);
}

TEST(MaxPoolBackward, RoutesToArgmax) {
  std::mt19937_64 rng(11);
  Tensor x = random_tensor(2, 4, 6, rng);
  const auto r = maxpool2x2_forward(x);
  const Tensor g = random_tensor(2, 2, 3, rng);
  const Tensor gx = maxpool2x2_backward(x, r.argmax, g);
  const double sg = std::accumulate(g.values().begin(), g.values().end(), 0.0);
  EXPECT_NEAR(std::accumulate(gx.values().begin(), gx.values().end(), 0.0), sg, 1e-12);
  int nonzero = 0;
  for (double v : gx.values()) nonzero += v != 0.0;
  EXPECT_EQ(nonzero, 12);
  const Tensor zero = maxpool2x2_backward(x, r.argmax, Tensor(2, 2, 3));
  for (double v : zero.values()) EXPECT_EQ(v, 0.0);
  auto f = [&] { return dot(g, maxpool2x2_forward(x).output); };
  EXPECT_LT(oracle::relative_error(gx.values(), oracle::numeric_gradient(x.values(), f)), 1e-5);
}

// ---- upsampling, concatenation

TEST(Upsample, ConstantAndMeanPoolInverse) {
  const Tensor flat = upsample2x_forward(Tensor(2, 3, 2, -0.25));
  for (double v : flat.values()) EXPECT_EQ(v, -0.25);
  std::mt19937_64 rng(12);
  const Tensor x = random_tensor(2, 3, 5, rng);
  const Tensor u = upsample2x_forward(x);
  ASSERT_EQ(u.height(), 6);
  ASSERT_EQ(u.width(), 10);
  for (int c = 0; c < 2; ++c)
    for (int y = 0; y < 3; ++y)
      for (int xx = 0; xx < 5; ++xx) {
        const double m = 0.25 * (u(c, 2 * y, 2 * xx) + u(c, 2 * y + 1, 2 * xx) + u(c, 2 * y, 2 * xx + 1) +
                                 u(c, 2 * y + 1, 2 * xx + 1));
        EXPECT_EQ(m, x(c, y, xx));
      }
  EXPECT_EQ(reference::upsample2x_forward(x), u);
}

TEST(Upsample, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(13);
  Tensor x = random_tensor(2, 3, 4, rng);
  const Tensor g = random_tensor(2, 6, 8, rng);
  const Tensor gx = upsample2x_backward(g);
  auto f = [&] { return dot(g, upsample2x_forward(x)); };
  EXPECT_LT(oracle::relative_error(gx.values(), oracle::numeric_gradient(x.values(), f)), 1e-5);
}

TEST(Concat, ShapesAddAndSplitInverts) {
  std::mt19937_64 rng(14);
  const Tensor a = random_tensor(3, 4, 5, rng), b = random_tensor(2, 4, 5, rng);
  const Tensor ab = concat_channels(a, b);
  EXPECT_EQ(ab.channels(), 5);
  const auto [a2, b2] = split_channels(ab, 3);
  EXPECT_EQ(a2, a);
  EXPECT_EQ(b2, b);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(ab.channel(3)[i], b.channel(0)[i]);
  EXPECT_THROW(concat_channels(a, Tensor(2, 4, 6)), Error);
}

// ---- activations

TEST(Relu, ValuesAndGradient) {
  Tensor x(1, 1, 2);
  x[0] = -1.0, x[1] = 2.0;
  const Tensor y = relu_forward(x);
  EXPECT_EQ(y[0], 0.0);
  EXPECT_EQ(y[1], 2.0);
  std::mt19937_64 rng(15);
  Tensor z = random_tensor(2, 3, 3, rng);
  for (double& v : z.values()) v += v >= 0 ? 0.1 : -0.1;  // keep clear of the kink
  const Tensor g = random_tensor(2, 3, 3, rng);
  const Tensor gz = relu_backward(relu_forward(z), g);
  auto f = [&] { return dot(g, relu_forward(z)); };
  EXPECT_LT(oracle::relative_error(gz.values(), oracle::numeric_gradient(z.values(), f)), 1e-5);
}

TEST(Sigmoid, ValuesAndGradient) {
  EXPECT_EQ(sigmoid_forward(Tensor(1, 1, 1, 0.0))[0], 0.5);
  std::mt19937_64 rng(16);
  Tensor z = random_tensor(2, 3, 3, rng, -4, 4);
  const Tensor g = random_tensor(2, 3, 3, rng);
  const Tensor gz = sigmoid_backward(sigmoid_forward(z), g);
  auto f = [&] { return dot(g, sigmoid_forward(z)); };
  EXPECT_LT(oracle::relative_error(gz.values(), oracle::numeric_gradient(z.values(), f)), 1e-5);
  const Tensor hi = sigmoid_forward(Tensor(1, 1, 2, 800.0)), lo = sigmoid_forward(Tensor(1, 1, 2, -800.0));
  EXPECT_EQ(hi[0], 1.0);
  EXPECT_EQ(lo[0], 0.0);
  for (double v : lo.values()) EXPECT_TRUE(std::isfinite(v));
}

// ---- dropout

TEST(Dropout, IdentityCases) {
  std::mt19937_64 rng(17);
  const Tensor x = random_tensor(2, 4, 4, rng);
  EXPECT_EQ(dropout_forward(x, 0.0, Mode::train, rng).output, x);
  EXPECT_EQ(dropout_forward(x, 0.25, Mode::infer, rng).output, x);
}

TEST(Dropout, SurvivorFractionWithinThreeSigma) {
  std::mt19937_64 rng(18);
  const Tensor x(4, 100, 250, 1.0);
  const double rate = 0.25;
  const auto r = dropout_forward(x, rate, Mode::train, rng);
  const double n = static_cast<double>(x.size());
  double survivors = 0;
  for (double v : r.output.values()) {
    if (v != 0.0) {
      EXPECT_NEAR(v, 1.0 / (1.0 - rate), 1e-15);
      ++survivors;
    }
  }
  const double sigma = std::sqrt(n * rate * (1 - rate));
  EXPECT_LT(std::abs(survivors - n * (1 - rate)), 3 * sigma);
}

TEST(Dropout, BackwardUsesTheMask) {
  std::mt19937_64 rng(19);
  const Tensor x = random_tensor(2, 4, 4, rng);
  const auto r = dropout_forward(x, 0.5, Mode::train, rng);
  const Tensor g = random_tensor(2, 4, 4, rng);
  const Tensor gx = dropout_backward(r.scale, g);
  for (size_t i = 0; i < x.size(); ++i) EXPECT_EQ(gx[i], g[i] * r.scale[i]);
}

// ---- a small composed stack

TEST(Composition, ThreeLayerStackGradient) {
  std::mt19937_64 rng(20);
  Tensor x = random_tensor(2, 4, 4, rng);
  ConvLayer a = random_conv(3, 2, rng), b = random_conv(3, 3, rng), c = random_conv(1, 6, rng);
  const Tensor t = random_tensor(1, 4, 4, rng, 0, 1);
  auto run = [&](auto* cache) {
    const Tensor h1 = relu_forward(conv2d_forward(x, a));
    const auto pool = maxpool2x2_forward(h1);
    const Tensor h2 = relu_forward(conv2d_forward(pool.output, b));
    const Tensor up = upsample2x_forward(h2);
    const Tensor cat = concat_channels(up, h1);
    const Tensor out = sigmoid_forward(conv2d_forward(cat, c));
    if (cache) *cache = {h1, pool.output, h2, cat, out, Tensor{}};
    if (cache) (*cache)[5] = Tensor(1, 1, static_cast<int>(pool.argmax.size()));
    if (cache)
      for (size_t i = 0; i < pool.argmax.size(); ++i) (*cache)[5][i] = pool.argmax[i];
    return dot(t, out);
  };
  std::array<Tensor, 6> cache;
  run(&cache);
  const auto& [h1, pooled, h2, cat, out, am] = cache;
  std::vector<std::int32_t> argmax(am.size());
  for (size_t i = 0; i < am.size(); ++i) argmax[i] = static_cast<std::int32_t>(am[i]);

  const auto gc = conv2d_backward(cat, c, sigmoid_backward(out, t));
  auto [g_up, g_h1_skip] = split_channels(gc.input, 3);
  const auto gb = conv2d_backward(pooled, b, relu_backward(h2, upsample2x_backward(g_up)));
  Tensor g_h1 = maxpool2x2_backward(h1, argmax, gb.input);
  for (size_t i = 0; i < g_h1.size(); ++i) g_h1[i] += g_h1_skip[i];
  const auto ga = conv2d_backward(x, a, relu_backward(h1, g_h1));

  auto f = [&] { return run(static_cast<std::array<Tensor, 6>*>(nullptr)); };
  EXPECT_LT(oracle::relative_error(ga.input.values(), oracle::numeric_gradient(x.values(), f)), 1e-5);
  EXPECT_LT(oracle::relative_error(ga.kernels, oracle::numeric_gradient(a.kernels, f)), 1e-5);
  EXPECT_LT(oracle::relative_error(gb.kernels, oracle::numeric_gradient(b.kernels, f)), 1e-5);
  EXPECT_LT(oracle::relative_error(gc.kernels, oracle::numeric_gradient(c.kernels, f)), 1e-5);
}

TEST(Forward, FinitenessPreserved) {
  std::mt19937_64 rng(21);
  const Tensor x = random_tensor(2, 8, 8, rng, -1e3, 1e3);
  const Tensor y = sigmoid_forward(conv2d_forward(relu_forward(conv2d_forward(x, random_conv(4, 2, rng))),
                                                  random_conv(1, 4, rng)));
  for (double v : y.values()) EXPECT_TRUE(std::isfinite(v));
}

// ---- ADAM

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> p = {1.0, -2.0, 3.0};
  const std::vector<double> g(3, 0.0);
  AdamState s;
  const std::span<double> ps[] = {p};
  const std::span<const double> gs[] = {g};
  for (int i = 0; i < 5; ++i) adam_step(ps, gs, s);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0, 3.0}));
  EXPECT_EQ(s.t, 5);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<double> p = {0.0, 0.0, 0.0};
  const std::vector<double> g = {0.3, -7.0, 1e-2};
  AdamState s;
  const std::span<double> ps[] = {p};
  const std::span<const double> gs[] = {g};
  adam_step(ps, gs, s);
  // m_hat = g, v_hat = g^2: step = -lr g / (|g| + eps)
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p[i], -1e-3 * g[i] / (std::abs(g[i]) + 1e-8), 1e-15);
}

TEST(Adam, MatchesScalarRecurrence) {
  std::vector<double> p = {0.5};
  AdamState s;
  s.lr = 0.01;
  double m = 0, v = 0, q = 0.5;
  for (int t = 1; t <= 20; ++t) {
    const std::vector<double> g = {std::sin(t) + p[0]};
    const double gq = std::sin(t) + q;
    const std::span<double> ps[] = {p};
    const std::span<const double> gs[] = {g};
    adam_step(ps, gs, s);
    m = 0.9 * m + 0.1 * gq;
    v = 0.999 * v + 0.001 * gq * gq;
    q -= 0.01 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    EXPECT_NEAR(p[0], q, 1e-14);
  }
}

TEST(Adam, ConvergesOnQuadratic) {
  // f = (a - 3)^2 + 10 (b + 1)^2
  std::vector<double> p = {0.0, 0.0};
  AdamState s;
  s.lr = 0.05;
  auto dist = [&] { return std::hypot(p[0] - 3, p[1] + 1); };
  const double d0 = dist();
  double prev = d0;
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> g = {2 * (p[0] - 3), 20 * (p[1] + 1)};
    const std::span<double> ps[] = {p};
    const std::span<const double> gs[] = {g};
    adam_step(ps, gs, s);
    if (i % 10 == 9) {
      EXPECT_LT(dist(), prev);
      prev = dist();
    }
  }
  EXPECT_LT(dist(), 0.5 * d0);
}

TEST(Adam, GroupCountMismatchThrows) {
  std::vector<double> p = {0.0};
  AdamState s;
  const std::span<double> ps[] = {p};
  EXPECT_THROW(adam_step(ps, {}, s), Error);
}
