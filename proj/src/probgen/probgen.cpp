#include "topo/probgen.hpp"

#include <algorithm>
#include <set>

#include <omp.h>

#include "topo/problem_json.hpp"

namespace topo::probgen {

void SamplerConfig::validate() const {
  if (nelx < 4 || nely < 4 || nelx % 4 != 0 || nely % 4 != 0) {
    fail(ErrorKind::invalid_parameter, "grid dimensions must be >= 4 and divisible by 4");
  }
  if (!(lambda_fixed_x > 0 && lambda_fixed_y > 0 && lambda_loads > 0)) {
    fail(ErrorKind::invalid_parameter, "Poisson rates must be positive");
  }
  if (!(boundary_weight >= 1.0)) fail(ErrorKind::invalid_parameter, "boundary weight must be >= 1");
  if (!(f0_std >= 0.0)) fail(ErrorKind::invalid_parameter, "f0 standard deviation must be >= 0");
  if (!(0.0 < f0_min && f0_min <= f0_max && f0_max < 1.0)) {
    fail(ErrorKind::invalid_parameter, "f0 clamp range must lie inside (0, 1)");
  }
}

nlohmann::json to_json(const SamplerConfig& cfg) {
  return {{"nelx", cfg.nelx},
          {"nely", cfg.nely},
          {"lambda_fixed_x", cfg.lambda_fixed_x},
          {"lambda_fixed_y", cfg.lambda_fixed_y},
          {"lambda_loads", cfg.lambda_loads},
          {"boundary_weight", cfg.boundary_weight},
          {"f0_mean", cfg.f0_mean},
          {"f0_std", cfg.f0_std},
          {"f0_clamp", {cfg.f0_min, cfg.f0_max}},
          {"physics", fem::to_string(cfg.physics)},
          {"random_load_direction", cfg.random_load_direction},
          {"seed", cfg.seed}};
}

NodeSampler::NodeSampler(int nelx, int nely, double boundary_weight) : nelx_(nelx), nely_(nely) {
  std::vector<double> weights(node_count());
  for (int n = 0; n < node_count(); ++n) {
    const bool b = is_boundary(n);
    boundary_count_ += b;
    weights[n] = b ? boundary_weight : 1.0;
  }
  dist_ = std::discrete_distribution<int>(weights.begin(), weights.end());
}

bool NodeSampler::is_boundary(int node) const {
  const int col = node / (nely_ + 1);
  const int row = node % (nely_ + 1);
  return col == 0 || col == nelx_ || row == 0 || row == nely_;
}

namespace {

int positive_poisson(double lambda, std::mt19937_64& rng, int* first, int* redraws) {
  std::poisson_distribution<int> dist(lambda);
  int n = dist(rng);
  if (first) *first = n;
  while (n == 0) {
    if (redraws) ++*redraws;
    n = dist(rng);
  }
  return n;
}

}  // namespace

fem::Problem sample_problem(const SamplerConfig& cfg, std::mt19937_64& rng, SampleStats* stats) {
  cfg.validate();
  NodeSampler nodes(cfg.nelx, cfg.nely, cfg.boundary_weight);
  std::normal_distribution<double> f0_dist(cfg.f0_mean, cfg.f0_std);
  std::bernoulli_distribution coin(0.5);
  const bool mechanical = cfg.physics == fem::Physics::mechanical;

  SampleStats local;
  for (int attempt = 0; attempt < 100; ++attempt) {
    int rx = 0, ry = 0, rl = 0;
    const int nx = positive_poisson(cfg.lambda_fixed_x, rng, &rx, &local.zero_redraws);
    const int ny = positive_poisson(cfg.lambda_fixed_y, rng, &ry, &local.zero_redraws);
    const int nl = positive_poisson(cfg.lambda_loads, rng, &rl, &local.zero_redraws);
    if (attempt == 0) {
      local.raw_fixed_x = rx;
      local.raw_fixed_y = ry;
      local.raw_loads = rl;
    }

    fem::Problem p;
    p.nelx = cfg.nelx;
    p.nely = cfg.nely;
    p.physics = cfg.physics;
    std::set<int> fixed;
    // Heat problems: every sampled support node is a zero-temperature node.
    for (int i = 0; i < nx; ++i) fixed.insert(mechanical ? 2 * nodes(rng) : nodes(rng));
    for (int i = 0; i < ny; ++i) fixed.insert(mechanical ? 2 * nodes(rng) + 1 : nodes(rng));
    p.fixed_dofs.assign(fixed.begin(), fixed.end());
    for (int i = 0; i < nl; ++i) {
      const int node = nodes(rng);
      int dof = node;
      if (mechanical) dof = 2 * node + ((cfg.random_load_direction && coin(rng)) ? 0 : 1);
      p.loads.push_back({dof, -1.0});
    }
    const double f0 = f0_dist(rng);
    p.volume_fraction = std::clamp(f0, cfg.f0_min, cfg.f0_max);
    local.f0_clamped = p.volume_fraction != f0;

    if (fem::is_well_posed(p)) {
      if (stats) *stats = local;
      return p;
    }
    ++local.rejections;
  }
  if (stats) *stats = local;
  fail(ErrorKind::sampling_failure, "no well-posed problem after 100 attempts");
}

std::mt19937_64 record_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

FrameStack to_frame_stack(const simp::IterationHistory& history) {
  FrameStack s;
  s.frames = static_cast<int>(history.frames.size());
  s.nely = history.problem.nely;
  s.nelx = history.problem.nelx;
  s.data.reserve(s.frame_size() * s.frames);
  for (const auto& f : history.frames) {
    for (double v : f.values) s.data.push_back(static_cast<float>(v));
  }
  return s;
}

GenerationSummary generate_dataset(const SamplerConfig& cfg, const simp::SimpConfig& simp_cfg,
                                   size_t n_problems, const std::filesystem::path& out_path) {
  cfg.validate();
  simp_cfg.validate();

  struct Slot {
    fem::Problem problem;
    FrameStack history;
    double final_compliance = 0.0;
    SampleStats stats;
    int solver_rejections = 0;
    std::string error;
  };

  DatasetWriter writer(out_path);
  nlohmann::json records = nlohmann::json::array();
  GenerationSummary summary;

  const size_t chunk = static_cast<size_t>(std::max(1, omp_get_max_threads())) * 4;
  for (size_t begin = 0; begin < n_problems; begin += chunk) {
    const size_t end = std::min(n_problems, begin + chunk);
    std::vector<Slot> slots(end - begin);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(slots.size()); ++i) {
      Slot& slot = slots[i];
      auto rng = record_rng(cfg.seed, begin + i);
      try {
        for (int attempt = 0;; ++attempt) {
          SampleStats stats;
          fem::Problem p = sample_problem(cfg, rng, &stats);
          slot.stats.rejections += stats.rejections;
          slot.stats.f0_clamped = stats.f0_clamped;
          try {
            const auto history = simp::optimize(p, simp_cfg);
            slot.problem = std::move(p);
            slot.history = to_frame_stack(history);
            slot.final_compliance = history.compliances.back();
            break;
          } catch (const Error&) {
            if (attempt >= 100) throw;
            ++slot.solver_rejections;
          }
        }
      } catch (const std::exception& e) {
        slot.error = e.what();
      }
    }
    for (size_t i = 0; i < slots.size(); ++i) {
      const Slot& slot = slots[i];
      if (!slot.error.empty()) {
        fail(ErrorKind::sampling_failure, "record " + std::to_string(begin + i) + ": " + slot.error);
      }
      writer.append(slot.history);
      summary.rejections += slot.stats.rejections;
      summary.solver_rejections += slot.solver_rejections;
      records.push_back({{"index", begin + i},
                         {"problem", slot.problem},
                         {"rejections", slot.stats.rejections},
                         {"solver_rejections", slot.solver_rejections},
                         {"f0_clamped", slot.stats.f0_clamped},
                         {"final_compliance", slot.final_compliance}});
    }
  }
  writer.finish();
  summary.records = n_problems;

  nlohmann::json meta;
  meta["format"] = "TOPD";
  meta["version"] = kDatasetVersion;
  meta["sampler"] = to_json(cfg);
  meta["simp"] = {{"max_iters", simp_cfg.max_iters},
                  {"move_limit", simp_cfg.move_limit},
                  {"damping", simp_cfg.damping},
                  {"filter_radius", simp_cfg.filter_radius},
                  {"penal", simp_cfg.material.penal},
                  {"emin", simp_cfg.material.emin},
                  {"nu", simp_cfg.material.nu}};
  meta["rejections"] = summary.rejections;
  meta["solver_rejections"] = summary.solver_rejections;
  meta["rejection_rate"] =
      n_problems ? static_cast<double>(summary.rejections) /
                       static_cast<double>(summary.rejections + n_problems)
                 : 0.0;
  meta["records"] = std::move(records);
  std::ofstream out(sidecar_path(out_path));
  out << meta.dump(1) << '\n';
  if (!out) fail(ErrorKind::io, "cannot write sidecar for " + out_path.string());
  return summary;
}

}  // namespace topo::probgen
