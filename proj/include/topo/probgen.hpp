#pragma once

// Pseudo-random problem sampling and dataset generation.

#include <cstdint>
#include <filesystem>
#include <random>

#include "topo/dataset.hpp"
#include "topo/fem.hpp"
#include "topo/simp.hpp"

namespace topo::probgen {

struct SamplerConfig {
  int nelx = 40;
  int nely = 40;
  double lambda_fixed_x = 2.0;
  double lambda_fixed_y = 1.0;
  double lambda_loads = 1.0;
  double boundary_weight = 100.0;
  double f0_mean = 0.5;
  double f0_std = 0.1;
  double f0_min = 0.2;
  double f0_max = 0.8;
  fem::Physics physics = fem::Physics::mechanical;
  bool random_load_direction = false;  // mechanical only: x or y with equal odds
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const SamplerConfig& cfg);

// Draws node indices; a boundary node is boundary_weight times as likely as
// an inner node.
class NodeSampler {
 public:
  NodeSampler(int nelx, int nely, double boundary_weight);

  int operator()(std::mt19937_64& rng) { return dist_(rng); }
  bool is_boundary(int node) const;
  int boundary_count() const { return boundary_count_; }
  int node_count() const { return (nelx_ + 1) * (nely_ + 1); }

 private:
  int nelx_;
  int nely_;
  int boundary_count_ = 0;
  std::discrete_distribution<int> dist_;
};

// Diagnostics of one sample_problem call.
struct SampleStats {
  int rejections = 0;           // whole problems discarded as ill-posed
  int raw_fixed_x = 0;          // very first Poisson draws of the call
  int raw_fixed_y = 0;
  int raw_loads = 0;
  int zero_redraws = 0;         // zero counts redrawn
  bool f0_clamped = false;
};

// Zero counts are redrawn and ill-posed problems resampled, up to 100 times.
fem::Problem sample_problem(const SamplerConfig& cfg, std::mt19937_64& rng,
                            SampleStats* stats = nullptr);

// Per-record generator, independent of worker scheduling.
std::mt19937_64 record_rng(std::uint64_t seed, std::uint64_t index);

struct GenerationSummary {
  size_t records = 0;
  size_t rejections = 0;        // ill-posed problems discarded during sampling
  size_t solver_rejections = 0; // well-posed problems whose SIMP run failed
};

// Samples n problems, runs SIMP on each and writes the TOPD file plus sidecar.
GenerationSummary generate_dataset(const SamplerConfig& cfg, const simp::SimpConfig& simp_cfg,
                                   size_t n_problems, const std::filesystem::path& out_path);

FrameStack to_frame_stack(const simp::IterationHistory& history);

}  // namespace topo::probgen
