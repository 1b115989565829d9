// Parallel kernels against the serial reference kernels, plus full network
// passes at the training resolution.
//
//   build/bench/bench_kernels --benchmark_filter=Conv

#include <random>

#include <benchmark/benchmark.h>

#include "topo/layers.hpp"
#include "topo/reference_kernels.hpp"
#include "topo/simp.hpp"
#include "topo/toponet.hpp"

namespace {

using namespace topo;

nn::Tensor random_tensor(int c, int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  nn::Tensor t(c, h, w);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

nn::ConvLayer random_layer(int out, int in, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  nn::ConvLayer l(out, in);
  for (auto& v : l.kernels) v = u(rng);
  for (auto& v : l.bias) v = u(rng);
  return l;
}

// Args: channels in, channels out, side.
void conv_args(benchmark::internal::Benchmark* b) {
  b->Args({2, 32, 40})->Args({32, 32, 40})->Args({64, 64, 20})->Args({128, 128, 10})->Args({48, 32, 40});
}

void BM_ConvForward(benchmark::State& s) {
  const auto x = random_tensor(static_cast<int>(s.range(0)), static_cast<int>(s.range(2)), static_cast<int>(s.range(2)), 1);
  const auto l = random_layer(static_cast<int>(s.range(1)), static_cast<int>(s.range(0)), 2);
  for (auto _ : s) benchmark::DoNotOptimize(nn::conv2d_forward(x, l));
}
BENCHMARK(BM_ConvForward)->Apply(conv_args)->Unit(benchmark::kMicrosecond);

void BM_ConvForwardReference(benchmark::State& s) {
  const auto x = random_tensor(static_cast<int>(s.range(0)), static_cast<int>(s.range(2)), static_cast<int>(s.range(2)), 1);
  const auto l = random_layer(static_cast<int>(s.range(1)), static_cast<int>(s.range(0)), 2);
  for (auto _ : s) benchmark::DoNotOptimize(nn::reference::conv2d_forward(x, l));
}
BENCHMARK(BM_ConvForwardReference)->Apply(conv_args)->Unit(benchmark::kMicrosecond);

void BM_ConvBackward(benchmark::State& s) {
  const int cin = static_cast<int>(s.range(0)), cout = static_cast<int>(s.range(1)), n = static_cast<int>(s.range(2));
  const auto x = random_tensor(cin, n, n, 1);
  const auto l = random_layer(cout, cin, 2);
  const auto g = random_tensor(cout, n, n, 3);
  for (auto _ : s) benchmark::DoNotOptimize(nn::conv2d_backward(x, l, g));
}
BENCHMARK(BM_ConvBackward)->Apply(conv_args)->Unit(benchmark::kMicrosecond);

void BM_ConvBackwardReference(benchmark::State& s) {
  const int cin = static_cast<int>(s.range(0)), cout = static_cast<int>(s.range(1)), n = static_cast<int>(s.range(2));
  const auto x = random_tensor(cin, n, n, 1);
  const auto l = random_layer(cout, cin, 2);
  const auto g = random_tensor(cout, n, n, 3);
  for (auto _ : s) benchmark::DoNotOptimize(nn::reference::conv2d_backward(x, l, g));
}
BENCHMARK(BM_ConvBackwardReference)->Apply(conv_args)->Unit(benchmark::kMicrosecond);

void BM_MaxPool(benchmark::State& s) {
  const auto x = random_tensor(64, 40, 40, 4);
  for (auto _ : s) benchmark::DoNotOptimize(nn::maxpool2x2_forward(x));
}
BENCHMARK(BM_MaxPool)->Unit(benchmark::kMicrosecond);

void BM_MaxPoolReference(benchmark::State& s) {
  const auto x = random_tensor(64, 40, 40, 4);
  for (auto _ : s) benchmark::DoNotOptimize(nn::reference::maxpool2x2_forward(x));
}
BENCHMARK(BM_MaxPoolReference)->Unit(benchmark::kMicrosecond);

void BM_Upsample(benchmark::State& s) {
  const auto x = random_tensor(128, 10, 10, 5);
  for (auto _ : s) benchmark::DoNotOptimize(nn::upsample2x_forward(x));
}
BENCHMARK(BM_Upsample)->Unit(benchmark::kMicrosecond);

void BM_UpsampleReference(benchmark::State& s) {
  const auto x = random_tensor(128, 10, 10, 5);
  for (auto _ : s) benchmark::DoNotOptimize(nn::reference::upsample2x_forward(x));
}
BENCHMARK(BM_UpsampleReference)->Unit(benchmark::kMicrosecond);

void BM_NetworkForward(benchmark::State& s) {
  const auto params = net::build_network(1);
  const auto x = random_tensor(2, static_cast<int>(s.range(0)), static_cast<int>(s.range(0)), 6);
  for (auto _ : s) benchmark::DoNotOptimize(net::forward(params, x));
}
BENCHMARK(BM_NetworkForward)->Arg(40)->Arg(80)->Unit(benchmark::kMillisecond);

void BM_NetworkForwardBackward(benchmark::State& s) {
  const auto params = net::build_network(1);
  const auto x = random_tensor(2, 40, 40, 6);
  const auto g = random_tensor(1, 40, 40, 7);
  for (auto _ : s) {
    const auto acts = net::forward_pass(params, x);
    benchmark::DoNotOptimize(net::backward(params, acts, g));
  }
}
BENCHMARK(BM_NetworkForwardBackward)->Unit(benchmark::kMillisecond);

void BM_SimpStep(benchmark::State& s) {
  const auto problem = fem::mbb_beam(static_cast<int>(s.range(0)), static_cast<int>(s.range(0)), 0.5);
  simp::Optimizer opt(problem, {});
  const auto x = simp::initial_density(problem);
  for (auto _ : s) benchmark::DoNotOptimize(opt.step(x));
}
BENCHMARK(BM_SimpStep)->Arg(40)->Arg(80)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
