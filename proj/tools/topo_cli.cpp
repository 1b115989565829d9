// topo: command-line driver for dataset generation, training, evaluation,
// hybrid solves and rendering.
//
//   topo generate --n 1000 --grid 40x40 --out data/mech.topd
//   topo train    --data data/mech.topd --preset P10 --out runs/p10.weights
//   topo evaluate --data data/mech.topd --model runs/p10.weights --out runs/table
//   topo solve    --mbb 40x40 --n0 10 --weights runs/p10.weights --out runs/mbb
//   topo baseline --mbb 60x20 --iters 100 --out runs/mbb_simp
//   topo render   --data data/mech.topd --record 0 --frames 1,10,100 --out sample.png
//
// Global flags: --seed, --config <key=value file>, --out. Every run writes
// <out>.manifest.json with the resolved options.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "topo/evaluate.hpp"
#include "topo/hybrid.hpp"
#include "topo/metrics.hpp"
#include "topo/png.hpp"
#include "topo/probgen.hpp"
#include "topo/problem_json.hpp"
#include "topo/sample.hpp"
#include "topo/train.hpp"
#include "topo/weights.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace topo;

namespace {

constexpr const char* kToolVersion = "1.0.0";

struct Globals {
  std::uint64_t seed = 0;
  std::string out;
};

std::pair<int, int> parse_grid(const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos) fail(ErrorKind::invalid_parameter, "grid must look like WxH, got '" + text + "'");
  try {
    return {std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1))};
  } catch (const std::exception&) {
    fail(ErrorKind::invalid_parameter, "grid must look like WxH, got '" + text + "'");
  }
}

fs::path with_suffix(const fs::path& base, const std::string& suffix) {
  return base.parent_path() / (base.filename().string() + suffix);
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::ostringstream s;
  s << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

void write_manifest(const CLI::App& app, const CLI::App& sub, const Globals& g, const fs::path& out,
                    const json& extra) {
  json m;
  m["tool"] = "topo";
  m["version"] = kToolVersion;
  m["command"] = sub.get_name();
  m["seed"] = g.seed;
  m["created"] = timestamp();
  m["threads"] = omp_get_max_threads();
  m["compiler"] = __VERSION__;
  m["config"] = app.config_to_str(true, false);
  m["dataset_format_version"] = probgen::kDatasetVersion;
  m["weights_format_version"] = net::kWeightsVersion;
  for (const auto& [k, v] : extra.items()) m[k] = v;
  const fs::path path = with_suffix(out, ".manifest.json");
  ensure_parent(path);
  std::ofstream f(path);
  f << m.dump(2) << '\n';
  if (!f) fail(ErrorKind::io, "cannot write " + path.string());
}

struct ProblemSource {
  std::string problem_file;
  std::string mbb;
  double volfrac = 0.5;

  fem::Problem load() const {
    if (!problem_file.empty() && !mbb.empty()) fail(ErrorKind::invalid_parameter, "give either --problem or --mbb");
    if (!problem_file.empty()) {
      std::ifstream in(problem_file);
      if (!in) fail(ErrorKind::io, "cannot open " + problem_file);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        fail(ErrorKind::format, problem_file + ": " + e.what());
      }
      fem::Problem p = j.get<fem::Problem>();
      p.validate();
      return p;
    }
    const auto [w, h] = parse_grid(mbb.empty() ? "60x20" : mbb);
    return fem::mbb_beam(w, h, volfrac);
  }

  void attach(CLI::App* sub) {
    sub->add_option("--problem", problem_file, "Problem JSON {nelx, nely, physics, fixed_dofs, loads, vol_frac}");
    sub->add_option("--mbb", mbb, "Half MBB beam on a WxH grid (default 60x20)");
    sub->add_option("--volfrac", volfrac, "Volume fraction for --mbb")->capture_default_str();
  }
};

double binary_compliance(const fem::Problem& problem, const fem::DensityField& mask) {
  const fem::MaterialModel m;
  const auto u = fem::assemble_and_solve(problem, mask, m);
  return fem::compliance_and_sensitivity(problem, mask, m, u).compliance;
}

// ---- generate

struct GenerateArgs {
  std::size_t n = 10;
  std::string grid = "40x40";
  std::string physics = "mechanical";
  int iters = 100;
  bool random_direction = false;
};

void run_generate(const CLI::App& app, const CLI::App& sub, const Globals& g, const GenerateArgs& a) {
  if (g.out.empty()) fail(ErrorKind::invalid_parameter, "generate needs --out <file.topd>");
  probgen::SamplerConfig cfg;
  std::tie(cfg.nelx, cfg.nely) = parse_grid(a.grid);
  cfg.physics = fem::physics_from_string(a.physics);
  cfg.random_load_direction = a.random_direction;
  cfg.seed = g.seed;
  simp::SimpConfig simp_cfg;
  simp_cfg.max_iters = a.iters;

  ensure_parent(g.out);
  const auto t0 = std::chrono::steady_clock::now();
  const auto summary = probgen::generate_dataset(cfg, simp_cfg, a.n, g.out);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double rate = static_cast<double>(summary.rejections) /
                      static_cast<double>(summary.rejections + std::max<std::size_t>(summary.records, 1));
  std::cout << "wrote " << summary.records << " records to " << g.out << " in " << std::fixed
            << std::setprecision(1) << secs << " s; ill-posed rejections " << summary.rejections << " ("
            << std::setprecision(1) << 100.0 * rate << "%), solver rejections " << summary.solver_rejections << '\n';
  write_manifest(app, sub, g, g.out,
                 {{"outputs", {g.out, probgen::sidecar_path(g.out).string()}},
                  {"records", summary.records},
                  {"rejections", summary.rejections},
                  {"seconds", secs}});
}

// ---- train

struct TrainArgs {
  std::string data;
  std::string preset = "P10";
  int epochs = 30;
  int batch_size = 64;
  int samples_per_epoch = 0;
  double lr = 1e-3;
  double beta = 1.0;
  double dropout = 0.25;
  double train_fraction = 0.9;
};

void run_train(const CLI::App& app, const CLI::App& sub, const Globals& g, const TrainArgs& a) {
  if (g.out.empty()) fail(ErrorKind::invalid_parameter, "train needs --out <weights file>");
  probgen::DatasetReader data(a.data);
  net::TrainConfig cfg = net::TrainConfig::preset(a.preset);
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch_size;
  cfg.samples_per_epoch = a.samples_per_epoch;
  cfg.learning_rate = a.lr;
  cfg.beta = a.beta;
  cfg.dropout_rate = a.dropout;
  cfg.seed = g.seed;
  const auto split = net::split_indices(data.size(), a.train_fraction);

  ensure_parent(g.out);
  const fs::path log_path = with_suffix(g.out, ".log.jsonl");
  std::ofstream log(log_path);
  if (!log) fail(ErrorKind::io, "cannot write " + log_path.string());
  std::cout << "training " << cfg.preset_name() << " on " << split.train.size() << " records, " << cfg.epochs
            << " epochs\n";
  const auto result = net::train(data, split.train, cfg, [&](const net::EpochLog& e) {
    log << net::to_json(e).dump() << '\n' << std::flush;
    std::cout << "epoch " << std::setw(3) << e.epoch << "  lr " << std::scientific << std::setprecision(2) << e.lr
              << std::fixed << std::setprecision(5) << "  loss " << e.loss << "  conf " << e.confidence << "  vol "
              << e.volume << std::setprecision(1) << "  " << e.seconds << " s\n";
  });
  json extra = {{"name", cfg.preset_name()}, {"train", net::to_json(cfg)}, {"dataset", a.data},
                {"train_records", split.train.size()}, {"validation_records", split.validation.size()}};
  net::save_weights(result.params, g.out, extra);
  write_manifest(app, sub, g, g.out, {{"outputs", {g.out, log_path.string()}}, {"train", net::to_json(cfg)}});
  std::cout << "saved " << g.out << '\n';
}

// ---- evaluate

struct EvaluateArgs {
  std::string data;
  std::vector<std::string> models;
  std::vector<int> stops = eval::kStopIterations;
  std::string split = "validation";
  double train_fraction = 0.9;
  bool transfer = false;
};

eval::NamedModel load_model(const std::string& spec) {
  std::string name, path = spec;
  if (const auto eq = spec.find('='); eq != std::string::npos) {
    name = spec.substr(0, eq);
    path = spec.substr(eq + 1);
  }
  if (name.empty()) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    try {
      const json head = json::parse(line);
      name = head.contains("info") ? head["info"].value("name", "") : "";
      if (name.empty()) name = fs::path(path).stem().string();
    } catch (const json::exception&) {
      name = fs::path(path).stem().string();
    }
  }
  return {name, net::load_weights(path)};
}

void run_evaluate(const CLI::App& app, const CLI::App& sub, const Globals& g, const EvaluateArgs& a) {
  probgen::DatasetReader data(a.data);
  std::vector<std::size_t> indices;
  if (a.split == "all") {
    for (std::size_t i = 0; i < data.size(); ++i) indices.push_back(i);
  } else if (a.split == "validation") {
    indices = net::split_indices(data.size(), a.train_fraction).validation;
  } else {
    fail(ErrorKind::invalid_parameter, "--split must be 'validation' or 'all'");
  }
  std::vector<eval::NamedModel> models;
  for (const auto& m : a.models) models.push_back(load_model(m));

  const auto r = a.transfer ? eval::transfer_eval(models, data, indices, a.stops)
                            : eval::evaluate(models, data, indices, a.stops);
  const std::string text = eval::format_table(r.accuracy) + '\n' + eval::format_table(r.iou);
  std::cout << "records: " << indices.size() << " (" << a.split << ")\n\n" << text;
  if (!g.out.empty()) {
    ensure_parent(g.out);
    std::ofstream(with_suffix(g.out, ".txt")) << text;
    std::ofstream(with_suffix(g.out, ".jsonl")) << eval::to_jsonl(r.accuracy) << eval::to_jsonl(r.iou);
    write_manifest(app, sub, g, g.out,
                   {{"outputs", {with_suffix(g.out, ".txt").string(), with_suffix(g.out, ".jsonl").string()}},
                    {"records", indices.size()}});
  }
}

// ---- solve (hybrid) and baseline

struct SolveArgs {
  ProblemSource source;
  std::string weights;
  int n0 = 10;
  int repeats = 1;
};

void run_solve(const CLI::App& app, const CLI::App& sub, const Globals& g, const SolveArgs& a) {
  const fem::Problem problem = a.source.load();
  const auto params = net::load_weights(a.weights);
  std::optional<eval::HybridResult> best;
  std::vector<double> totals;
  for (int i = 0; i < std::max(1, a.repeats); ++i) {
    auto r = eval::hybrid_solve(problem, a.n0, params);
    totals.push_back(r.timing.total_seconds);
    if (!best) best = std::move(r);
  }
  std::sort(totals.begin(), totals.end());
  const double median = totals[totals.size() / 2];
  const auto& r = *best;
  const double vf = r.structure.mean();
  const double c = binary_compliance(problem, r.structure);
  std::cout << std::fixed << std::setprecision(4) << "hybrid N0=" << a.n0 << ": volume fraction " << vf
            << " (target " << problem.volume_fraction << "), compliance of binary structure " << c << '\n'
            << "time: simp " << r.timing.simp_seconds << " s, inference " << r.timing.inference_seconds
            << " s, total (median of " << totals.size() << ") " << median << " s\n";
  if (!g.out.empty()) {
    ensure_parent(g.out);
    eval::render_png(r.structure, with_suffix(g.out, ".png"));
    const fem::DensityField panels[] = {r.density, r.prediction, r.structure};
    eval::render_png(eval::tile(panels), with_suffix(g.out, "_panels.png"));
    write_manifest(app, sub, g, g.out,
                   {{"outputs", {with_suffix(g.out, ".png").string(), with_suffix(g.out, "_panels.png").string()}},
                    {"problem", problem},
                    {"volume_fraction", vf},
                    {"compliance", c},
                    {"timing", {{"simp", r.timing.simp_seconds},
                                {"inference", r.timing.inference_seconds},
                                {"total", r.timing.total_seconds},
                                {"total_median", median}}}});
  }
}

struct BaselineArgs {
  ProblemSource source;
  int iters = 100;
  double rmin = 1.5;
};

void run_baseline(const CLI::App& app, const CLI::App& sub, const Globals& g, const BaselineArgs& a) {
  const fem::Problem problem = a.source.load();
  simp::SimpConfig cfg;
  cfg.max_iters = a.iters;
  cfg.filter_radius = a.rmin;
  const auto t0 = std::chrono::steady_clock::now();
  const auto h = simp::optimize(problem, cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto& last = h.frames.back();
  const auto mask = eval::threshold(last);
  std::cout << std::fixed << std::setprecision(4) << "SIMP " << a.iters << " iterations in " << secs
            << " s; final compliance " << h.compliances.back() << ", thresholded volume " << mask.mean() << '\n';
  if (!g.out.empty()) {
    ensure_parent(g.out);
    eval::render_png(last, with_suffix(g.out, ".png"));
    write_manifest(app, sub, g, g.out,
                   {{"outputs", {with_suffix(g.out, ".png").string()}},
                    {"problem", problem},
                    {"seconds", secs},
                    {"compliances", h.compliances}});
  }
}

// ---- render

fem::DensityField to_field(const nn::Tensor& t) {
  fem::DensityField f(t.height(), t.width());
  std::copy(t.values().begin(), t.values().begin() + static_cast<std::ptrdiff_t>(f.size()), f.values.begin());
  return f;
}

struct RenderArgs {
  std::string data;
  std::size_t record = 0;
  std::vector<int> frames = {0, 5, 10, 20, 50, 100};
  std::string weights;
  int k = 10;
};

void run_render(const CLI::App& app, const CLI::App& sub, const Globals& g, const RenderArgs& a) {
  if (g.out.empty()) fail(ErrorKind::invalid_parameter, "render needs --out <file.png>");
  probgen::DatasetReader data(a.data);
  const auto h = data.history(a.record);
  const double f0 = data.has_metadata() ? data.problems().at(a.record).volume_fraction : 0.0;
  std::vector<fem::DensityField> panels;
  for (int f : a.frames) {
    if (f < 0 || f > h.frames) fail(ErrorKind::invalid_parameter, "frame " + std::to_string(f) + " out of range");
    panels.push_back(f == 0 ? fem::DensityField(h.nely, h.nelx, f0) : h.field(f - 1));
  }
  if (!a.weights.empty()) {
    const auto params = net::load_weights(a.weights);
    const auto s = net::make_sample(data, a.record, a.k, 0);
    panels.push_back(to_field(s.density));
    panels.push_back(eval::threshold(to_field(net::forward(params, s.input()))));
    panels.push_back(to_field(s.target));
  }
  ensure_parent(g.out);
  eval::render_png(eval::tile(panels), g.out);
  write_manifest(app, sub, g, g.out, {{"outputs", {g.out}}, {"record", a.record}});
  std::cout << "wrote " << g.out << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topology optimization with SIMP histories and a segmentation network"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a key=value file");
  Globals g;
  app.add_option("--seed", g.seed, "Seed for sampling and training")->capture_default_str();
  app.add_option("--out", g.out, "Output path or prefix");
  app.set_version_flag("--version", kToolVersion);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Sample problems, run SIMP, write a TOPD dataset");
  generate->add_option("--n", gen.n, "Number of records")->capture_default_str();
  generate->add_option("--grid", gen.grid, "Grid WxH, both divisible by 4")->capture_default_str();
  generate->add_option("--physics", gen.physics, "mechanical or heat")
      ->check(CLI::IsMember({"mechanical", "heat"}))
      ->capture_default_str();
  generate->add_option("--iters", gen.iters, "SIMP iterations per record")->capture_default_str();
  generate->add_flag("--random-load-direction", gen.random_direction, "Load x or y with equal odds");

  TrainArgs tr;
  auto* trainc = app.add_subcommand("train", "Train the network on a dataset");
  trainc->add_option("--data", tr.data, "TOPD dataset")->required();
  trainc->add_option("--preset", tr.preset, "Stop-iteration distribution: P5, P10, P30, U")
      ->check(CLI::IsMember({"P5", "P10", "P30", "U"}))
      ->capture_default_str();
  trainc->add_option("--epochs", tr.epochs)->capture_default_str();
  trainc->add_option("--batch-size", tr.batch_size)->capture_default_str();
  trainc->add_option("--samples-per-epoch", tr.samples_per_epoch, "0 = one per training record")
      ->capture_default_str();
  trainc->add_option("--lr", tr.lr, "Initial learning rate, halved once mid-training")->capture_default_str();
  trainc->add_option("--beta", tr.beta, "Volume loss weight")->capture_default_str();
  trainc->add_option("--dropout", tr.dropout)->capture_default_str();
  trainc->add_option("--train-fraction", tr.train_fraction)->capture_default_str();

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Accuracy and IoU tables against the thresholding baseline");
  evaluate->add_option("--data", ev.data, "TOPD dataset")->required();
  evaluate->add_option("--model", ev.models, "Weights file, optionally NAME=PATH; repeatable");
  evaluate->add_option("--stops", ev.stops, "Stop iterations")->delimiter(',')->capture_default_str();
  evaluate->add_option("--split", ev.split, "validation (last 10%) or all")->capture_default_str();
  evaluate->add_option("--train-fraction", ev.train_fraction)->capture_default_str();
  evaluate->add_flag("--transfer", ev.transfer, "Require a heat-conduction dataset");

  SolveArgs so;
  auto* solve = app.add_subcommand("solve", "Hybrid solve: N0 SIMP iterations, then one forward pass");
  so.source.attach(solve);
  solve->add_option("--weights", so.weights)->required();
  solve->add_option("--n0", so.n0, "SIMP iterations before the network")->capture_default_str();
  solve->add_option("--repeats", so.repeats, "Timing repeats; the median is reported")->capture_default_str();

  BaselineArgs ba;
  auto* baseline = app.add_subcommand("baseline", "Plain SIMP run");
  ba.source.attach(baseline);
  baseline->add_option("--iters", ba.iters)->capture_default_str();
  baseline->add_option("--rmin", ba.rmin, "Filter radius")->capture_default_str();

  RenderArgs re;
  auto* render = app.add_subcommand("render", "Render frames of a dataset record to PNG");
  render->add_option("--data", re.data)->required();
  render->add_option("--record", re.record)->capture_default_str();
  render->add_option("--frames", re.frames, "Frame numbers; frame k is the density after k updates, 0 the uniform start")->delimiter(',')->capture_default_str();
  render->add_option("--weights", re.weights, "Append input, prediction and target panels");
  render->add_option("--k", re.k, "Stop iteration for the prediction panel")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) run_generate(app, *generate, g, gen);
    if (*trainc) run_train(app, *trainc, g, tr);
    if (*evaluate) run_evaluate(app, *evaluate, g, ev);
    if (*solve) run_solve(app, *solve, g, so);
    if (*baseline) run_baseline(app, *baseline, g, ba);
    if (*render) run_render(app, *render, g, re);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
