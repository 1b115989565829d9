#include "topo/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "topo/adam.hpp"
#include "topo/sample.hpp"

namespace topo::net {

void TrainConfig::validate() const {
  if (!(beta >= 0.0)) fail(ErrorKind::invalid_parameter, "beta must be >= 0");
  if (epochs < 1) fail(ErrorKind::invalid_parameter, "epochs must be >= 1");
  if (batch_size < 1) fail(ErrorKind::invalid_parameter, "batch size must be >= 1");
  if (samples_per_epoch < 0) fail(ErrorKind::invalid_parameter, "samples per epoch must be >= 0");
  if (!(learning_rate > 0.0)) fail(ErrorKind::invalid_parameter, "learning rate must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail(ErrorKind::invalid_parameter, "dropout rate must lie in [0, 1)");
  if (k_distribution == StopDistribution::poisson && !(lambda > 0.0)) {
    fail(ErrorKind::invalid_parameter, "Poisson rate must be positive");
  }
  if (k_distribution == StopDistribution::uniform && uniform_max < 1) {
    fail(ErrorKind::invalid_parameter, "uniform upper bound must be >= 1");
  }
}

TrainConfig TrainConfig::preset(const std::string& name) {
  TrainConfig cfg;
  if (name == "P5" || name == "P10" || name == "P30") {
    cfg.k_distribution = StopDistribution::poisson;
    cfg.lambda = std::stod(name.substr(1));
  } else if (name == "U") {
    cfg.k_distribution = StopDistribution::uniform;
    cfg.uniform_max = 100;
  } else {
    fail(ErrorKind::invalid_parameter, "unknown preset '" + name + "' (expected P5, P10, P30 or U)");
  }
  return cfg;
}

std::string TrainConfig::preset_name() const {
  if (k_distribution == StopDistribution::uniform) return "CNN U[1, " + std::to_string(uniform_max) + "]";
  const double r = std::round(lambda);
  const std::string l = r == lambda ? std::to_string(static_cast<long long>(r)) : std::to_string(lambda);
  return "CNN P(" + l + ")";
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return {{"k_distribution", cfg.k_distribution == StopDistribution::poisson ? "poisson" : "uniform"},
          {"lambda", cfg.lambda},
          {"uniform_max", cfg.uniform_max},
          {"beta", cfg.beta},
          {"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"samples_per_epoch", cfg.samples_per_epoch},
          {"learning_rate", cfg.learning_rate},
          {"halving_epoch", cfg.halving_epoch()},
          {"dropout_rate", cfg.dropout_rate},
          {"seed", cfg.seed}};
}

nlohmann::json to_json(const EpochLog& log) {
  return {{"epoch", log.epoch},
          {"lr", log.lr},
          {"loss", log.loss},
          {"loss_conf", log.confidence},
          {"loss_vol", log.volume},
          {"seconds", log.seconds}};
}

int draw_stop_iteration(const TrainConfig& cfg, std::mt19937_64& rng, int max_k) {
  int k = 1;
  if (cfg.k_distribution == StopDistribution::poisson) {
    k = std::poisson_distribution<int>(cfg.lambda)(rng);
  } else {
    k = std::uniform_int_distribution<int>(1, cfg.uniform_max)(rng);
  }
  return std::clamp(k, 1, max_k);
}

namespace {

void add_into(NetworkParams& acc, const NetworkParams& g) {
  for (int l = 0; l < kLayerCount; ++l) {
    auto& ak = acc[l].kernels;
    const auto& gk = g[l].kernels;
    for (size_t i = 0; i < ak.size(); ++i) ak[i] += gk[i];
    auto& ab = acc[l].bias;
    const auto& gb = g[l].bias;
    for (size_t i = 0; i < ab.size(); ++i) ab[i] += gb[i];
  }
}

}  // namespace

TrainResult train(const probgen::DatasetReader& data, std::span<const std::size_t> indices,
                  const TrainConfig& cfg, const std::function<void(const EpochLog&)>& on_epoch) {
  cfg.validate();
  if (indices.empty()) fail(ErrorKind::invalid_input, "training set is empty");
  if (!data.has_metadata()) fail(ErrorKind::invalid_input, "training requires the dataset sidecar");

  std::mt19937_64 rng(cfg.seed);
  TrainResult result;
  result.params = build_network(rng());
  NetworkParams& params = result.params;

  nn::AdamState adam;
  adam.lr = cfg.learning_rate;
  std::vector<std::span<double>> param_views;
  for (auto& l : params.layers) {
    param_views.emplace_back(l.kernels);
    param_views.emplace_back(l.bias);
  }

  const std::size_t per_epoch = cfg.samples_per_epoch > 0 ? static_cast<std::size_t>(cfg.samples_per_epoch)
                                                          : indices.size();
  std::vector<std::size_t> order(indices.begin(), indices.end());
  ForwardOptions fwd{Mode::train, cfg.dropout_rate, &rng};

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    if (epoch == cfg.halving_epoch()) adam.lr = 0.5 * cfg.learning_rate;

    std::vector<std::size_t> schedule;
    schedule.reserve(per_epoch);
    while (schedule.size() < per_epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t i = 0; i < order.size() && schedule.size() < per_epoch; ++i) schedule.push_back(order[i]);
    }

    double sum_loss = 0.0, sum_conf = 0.0, sum_vol = 0.0;
    int batch_index = 0;
    for (std::size_t start = 0; start < schedule.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(schedule.size(), start + static_cast<std::size_t>(cfg.batch_size));
      NetworkParams acc = NetworkParams::zeros();
      for (std::size_t s = start; s < end; ++s) {
        const std::size_t record = schedule[s];
        const int frames = data.shape(record).frames;
        const int k = draw_stop_iteration(cfg, rng, frames - 1);
        const int transform = std::uniform_int_distribution<int>(0, 7)(rng);
        const TrainingSample sample = make_sample(data, record, k, transform);
        const Activations acts = forward_pass(params, sample.input(), fwd);
        const LossValue lv = loss(acts.prediction, sample.target, cfg.beta);
        if (!std::isfinite(lv.total)) {
          fail(ErrorKind::training, "non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                        std::to_string(batch_index) + ", lr " + std::to_string(adam.lr) +
                                        ", record " + std::to_string(record) + ", k " + std::to_string(k));
        }
        sum_loss += lv.total;
        sum_conf += lv.confidence;
        sum_vol += lv.volume;
        add_into(acc, backward(params, acts, loss_backward(acts.prediction, sample.target, cfg.beta)));
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      std::vector<std::span<const double>> grad_views;
      for (auto& l : acc.layers) {
        for (double& v : l.kernels) v *= inv;
        for (double& v : l.bias) v *= inv;
        grad_views.emplace_back(l.kernels);
        grad_views.emplace_back(l.bias);
      }
      nn::adam_step(param_views, grad_views, adam);
    }

    EpochLog log;
    log.epoch = epoch;
    log.lr = adam.lr;
    const double n = static_cast<double>(schedule.size());
    log.loss = sum_loss / n;
    log.confidence = sum_conf / n;
    log.volume = sum_vol / n;
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

Split split_indices(std::size_t count, double train_fraction) {
  Split s;
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(count)));
  for (std::size_t i = 0; i < count; ++i) (i < n_train ? s.train : s.validation).push_back(i);
  return s;
}

}  // namespace topo::net
