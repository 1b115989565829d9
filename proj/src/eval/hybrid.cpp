#include "topo/hybrid.hpp"

#include <chrono>

#include <omp.h>

#include "topo/metrics.hpp"

namespace topo::eval {

namespace {

class SingleThreadScope {
 public:
  SingleThreadScope() : previous_(omp_get_max_threads()) { omp_set_num_threads(1); }
  ~SingleThreadScope() { omp_set_num_threads(previous_); }
  SingleThreadScope(const SingleThreadScope&) = delete;
  SingleThreadScope& operator=(const SingleThreadScope&) = delete;

 private:
  int previous_;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

HybridResult hybrid_solve(const fem::Problem& problem, int n0, const net::NetworkParams& params,
                          const simp::SimpConfig& config) {
  if (n0 < 1) fail(ErrorKind::invalid_parameter, "hybrid solve needs at least one SIMP iteration");
  net::check_input_shape(problem.nely, problem.nelx);
  SingleThreadScope single;

  HybridResult r;
  const auto t0 = Clock::now();
  simp::Optimizer opt(problem, config);
  fem::DensityField previous = simp::initial_density(problem);
  fem::DensityField current = previous;
  for (int k = 0; k < n0; ++k) {
    try {
      previous = std::move(current);
      current = opt.step(previous).next;
    } catch (const Error& e) {
      throw e.with_context("iteration " + std::to_string(k + 1));
    }
  }
  r.timing.simp_seconds = seconds_since(t0);

  const auto t1 = Clock::now();
  fem::DensityField update = current;
  for (std::size_t i = 0; i < update.size(); ++i) update.values[i] -= previous.values[i];
  r.prediction = net::predict(params, current, update);
  r.structure = threshold(r.prediction);
  r.timing.inference_seconds = seconds_since(t1);
  r.timing.total_seconds = seconds_since(t0);
  r.density = std::move(current);
  return r;
}

double time_simp(const fem::Problem& problem, int iterations, const simp::SimpConfig& config) {
  SingleThreadScope single;
  simp::SimpConfig cfg = config;
  cfg.max_iters = iterations;
  const auto t0 = Clock::now();
  simp::optimize(problem, cfg);
  return seconds_since(t0);
}

}  // namespace topo::eval
