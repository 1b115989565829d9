#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "topo/dataset.hpp"
#include "topo/toponet.hpp"

namespace topo::net {

enum class StopDistribution { poisson, uniform };

struct TrainConfig {
  StopDistribution k_distribution = StopDistribution::poisson;
  double lambda = 10.0;   // Poisson rate
  int uniform_max = 100;  // U[1, uniform_max]
  double beta = 1.0;
  int epochs = 30;
  int batch_size = 64;
  int samples_per_epoch = 0;  // 0: one sample per training record
  double learning_rate = 1e-3;
  double dropout_rate = 0.25;
  std::uint64_t seed = 0;

  void validate() const;
  // Named presets: "P5", "P10", "P30", "U".
  static TrainConfig preset(const std::string& name);
  std::string preset_name() const;
  int halving_epoch() const { return epochs / 2; }
};

nlohmann::json to_json(const TrainConfig& cfg);

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
  double confidence = 0.0;
  double volume = 0.0;
  double seconds = 0.0;
};

nlohmann::json to_json(const EpochLog& log);

struct TrainResult {
  NetworkParams params;
  std::vector<EpochLog> log;
};

// Draws a stop iteration clamped to [1, max_k].
int draw_stop_iteration(const TrainConfig& cfg, std::mt19937_64& rng, int max_k);

// Random draws per epoch, in order: index shuffle; then for each sample the
// stop iteration, the D4 element, and the dropout masks of its forward pass.
TrainResult train(const probgen::DatasetReader& data, std::span<const std::size_t> indices,
                  const TrainConfig& cfg, const std::function<void(const EpochLog&)>& on_epoch = {});

// 90/10 split by record index: the first 90% train, the rest validate.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};
Split split_indices(std::size_t count, double train_fraction = 0.9);

}  // namespace topo::net
