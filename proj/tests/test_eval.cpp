#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "topo/evaluate.hpp"
#include "topo/hybrid.hpp"
#include "topo/metrics.hpp"
#include "topo/png.hpp"
#include "topo/probgen.hpp"

using namespace topo;
using namespace topo::eval;
using fem::DensityField;

namespace {

DensityField mask(int rows, int cols, std::vector<double> v) {
  DensityField f(rows, cols);
  f.values = std::move(v);
  return f;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "topo_eval_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

// Small 100-frame dataset shared by the evaluation tests.
const std::filesystem::path& small_dataset() {
  static const std::filesystem::path path = [] {
    probgen::SamplerConfig c;
    c.nelx = c.nely = 16;
    c.seed = 41;
    const auto p = scratch("eval16.topd");
    probgen::generate_dataset(c, simp::SimpConfig{}, 6, p);
    return p;
  }();
  return path;
}

}  // namespace

// ---- metrics

TEST(Metrics, IdenticalAndComplementaryMasks) {
  const auto a = mask(2, 3, {1, 0, 1, 0, 0, 1});
  const auto b = mask(2, 3, {0, 1, 0, 1, 1, 0});
  EXPECT_EQ(binary_accuracy(a, a), 1.0);
  EXPECT_EQ(iou(a, a), 1.0);
  EXPECT_EQ(binary_accuracy(a, b), 0.0);
  EXPECT_EQ(iou(a, b), 0.0);
}

TEST(Metrics, TwoByTwoCounts) {
  const auto pred = mask(2, 2, {1, 0, 1, 1});
  const auto truth = mask(2, 2, {1, 0, 0, 1});
  const auto c = confusion(pred.values, truth.values);
  EXPECT_EQ(c.w00, 1u);
  EXPECT_EQ(c.w01, 1u);
  EXPECT_EQ(c.w10, 0u);
  EXPECT_EQ(c.w11, 2u);
  EXPECT_EQ(c.n0(), 2u);
  EXPECT_EQ(c.n1(), 2u);
  EXPECT_EQ(binary_accuracy(pred, truth), 0.75);
  EXPECT_DOUBLE_EQ(iou(pred, truth), 7.0 / 12.0);
}

TEST(Metrics, DegenerateClasses) {
  const auto ones = mask(2, 2, {1, 1, 1, 1});
  const auto zeros = mask(2, 2, {0, 0, 0, 0});
  EXPECT_EQ(iou(ones, ones), 1.0);
  EXPECT_EQ(iou(zeros, zeros), 1.0);
  EXPECT_EQ(binary_accuracy(ones, ones), 1.0);
  // Class 0 present only in the truth: its ratio is 0/(n0 + 0) = 0, class 1 is 0/(0 + 4).
  EXPECT_EQ(iou(ones, zeros), 0.0);
  // One void pixel predicted as material, the rest material.
  const auto three = mask(2, 2, {1, 1, 1, 0});
  EXPECT_DOUBLE_EQ(iou(ones, three), 0.5 * (0.0 / 1.0 + 3.0 / 4.0));
}

TEST(Metrics, SymmetricUnderClassRelabeling) {
  std::mt19937_64 rng(1);
  std::bernoulli_distribution b(0.4);
  for (int trial = 0; trial < 20; ++trial) {
    DensityField p(5, 7), t(5, 7), pf(5, 7), tf(5, 7);
    for (size_t i = 0; i < p.size(); ++i) {
      p.values[i] = b(rng);
      t.values[i] = b(rng);
      pf.values[i] = 1 - p.values[i];
      tf.values[i] = 1 - t.values[i];
    }
    EXPECT_DOUBLE_EQ(iou(p, t), iou(pf, tf));
    EXPECT_DOUBLE_EQ(binary_accuracy(p, t), binary_accuracy(pf, tf));
    EXPECT_GE(iou(p, t), 0.0);
    EXPECT_LE(iou(p, t), 1.0);
  }
}

TEST(Metrics, RejectsBadInput) {
  EXPECT_THROW(binary_accuracy(DensityField(2, 2), DensityField(2, 3)), Error);
  EXPECT_THROW(iou(mask(1, 2, {0.5, 1}), mask(1, 2, {0, 1})), Error);
}

TEST(Threshold, BoundaryAndElementwise) {
  for (double v : threshold(DensityField(3, 3, 0.5)).values) EXPECT_EQ(v, 1.0);
  for (double v : threshold(DensityField(3, 3, 0.2)).values) EXPECT_EQ(v, 0.0);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> d(0, 1);
  DensityField f(6, 9);
  for (double& v : f.values) v = d(rng);
  const auto m = threshold(f);
  for (size_t i = 0; i < f.size(); ++i) EXPECT_EQ(m.values[i], f.values[i] >= 0.5 ? 1.0 : 0.0);
}

// ---- evaluation tables

TEST(Evaluate, ThresholdingRowMatchesDirectComputation) {
  probgen::DatasetReader data(small_dataset());
  const std::vector<std::size_t> idx = {0, 1, 2, 3, 4, 5};
  const std::vector<int> stops = {5, 10, 99};
  const auto r = evaluate({}, data, idx, stops);
  ASSERT_EQ(r.accuracy.methods.size(), 1u);
  EXPECT_EQ(r.accuracy.methods[0], "Thresholding");
  for (int k : stops) {
    double acc = 0, io = 0;
    for (auto i : idx) {
      const auto h = data.history(i);
      const auto truth = threshold(h.field(h.frames - 1));
      const auto pred = threshold(h.field(k - 1));
      acc += binary_accuracy(pred, truth);
      io += iou(pred, truth);
    }
    EXPECT_NEAR(r.accuracy.at("Thresholding", k), 100 * acc / idx.size(), 1e-12);
    EXPECT_NEAR(r.iou.at("Thresholding", k), 100 * io / idx.size(), 1e-12);
  }
  EXPECT_GE(r.accuracy.at("Thresholding", 99), r.accuracy.at("Thresholding", 5));
}

TEST(Evaluate, CnnRowsAreBoundedAndDeterministic) {
  probgen::DatasetReader data(small_dataset());
  const std::vector<std::size_t> idx = {1, 3, 5};
  const std::vector<NamedModel> models = {{"CNN P(10)", net::build_network(1)}, {"CNN U[1, 100]", net::build_network(2)}};
  const auto a = evaluate(models, data, idx, kStopIterations);
  const auto b = evaluate(models, data, idx, kStopIterations);
  EXPECT_EQ(a.accuracy, b.accuracy);
  EXPECT_EQ(a.iou, b.iou);
  ASSERT_EQ(a.accuracy.methods.size(), 3u);
  EXPECT_EQ(a.accuracy.stop_iterations, kStopIterations);
  for (const auto* t : {&a.accuracy, &a.iou})
    for (const auto& row : t->cells)
      for (double v : row) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 100.0);
      }
  // CNN cell recomputed from predict().
  const int k = 10;
  double acc = 0;
  for (auto i : idx) {
    const auto h = data.history(i);
    DensityField upd = h.field(k - 1);
    const auto prev = h.field(k - 2);
    for (size_t j = 0; j < upd.size(); ++j) upd.values[j] -= prev.values[j];
    const auto pred = threshold(net::predict(models[0].params, h.field(k - 1), upd));
    acc += binary_accuracy(pred, threshold(h.field(h.frames - 1)));
  }
  EXPECT_NEAR(a.accuracy.at("CNN P(10)", k), 100 * acc / idx.size(), 1e-9);
}

TEST(Evaluate, EmptySelectionAndHeatGuard) {
  probgen::DatasetReader data(small_dataset());
  EXPECT_THROW(evaluate({}, data, {}, kStopIterations), Error);
  const std::vector<std::size_t> idx = {0};
  EXPECT_THROW(transfer_eval({}, data, idx, kStopIterations), Error);  // mechanical data
}

TEST(Evaluate, TextAndJsonLayouts) {
  EvalTable t;
  t.metric = "Binary Accuracy";
  t.methods = {"Thresholding", "CNN P(5)"};
  t.stop_iterations = {5, 10};
  t.cells = {{92.91, 95.4}, {95.8, 97.2}};
  const std::string text = format_table(t);
  EXPECT_NE(text.find("Thresholding"), std::string::npos);
  EXPECT_NE(text.find("92.9"), std::string::npos);
  EXPECT_NE(text.find("97.2"), std::string::npos);
  const std::string jl = to_jsonl(t);
  EXPECT_EQ(std::count(jl.begin(), jl.end(), '\n'), 4);
  const auto first = nlohmann::json::parse(jl.substr(0, jl.find('\n')));
  EXPECT_EQ(first.at("method"), "Thresholding");
  EXPECT_EQ(first.at("iteration"), 5);
  EXPECT_DOUBLE_EQ(first.at("value").get<double>(), 92.91);
  EXPECT_THROW(t.at("CNN P(30)", 5), Error);
}

// ---- hybrid solver

TEST(Hybrid, ComposesSimpAndForward) {
  const auto problem = fem::mbb_beam(16, 8, 0.5);
  const auto params = net::build_network(3);
  const int n0 = 6;
  const auto r = hybrid_solve(problem, n0, params);
  simp::SimpConfig cfg;
  cfg.max_iters = n0;
  const auto h = simp::optimize(problem, cfg);
  EXPECT_EQ(r.density, h.frames[n0 - 1]);
  DensityField upd = h.frames[n0 - 1];
  for (size_t j = 0; j < upd.size(); ++j) upd.values[j] -= h.frames[n0 - 2].values[j];
  EXPECT_EQ(r.prediction, net::predict(params, h.frames[n0 - 1], upd));
  EXPECT_EQ(r.structure, threshold(r.prediction));
  EXPECT_GT(r.timing.simp_seconds, 0.0);
  EXPECT_GT(r.timing.inference_seconds, 0.0);
  EXPECT_GE(r.timing.total_seconds, r.timing.simp_seconds + r.timing.inference_seconds - 1e-9);
}

TEST(Hybrid, FirstIterationUsesUniformStart) {
  const auto problem = fem::mbb_beam(8, 4, 0.4);
  const auto r = hybrid_solve(problem, 1, net::build_network(4));
  EXPECT_EQ(r.density.nelx, 8);
  EXPECT_THROW(hybrid_solve(problem, 0, net::build_network(4)), Error);
  EXPECT_THROW(hybrid_solve(fem::mbb_beam(10, 4, 0.4), 3, net::build_network(4)), Error);
}

TEST(Hybrid, WallTimeGrowsWithN0) {
  const auto problem = fem::mbb_beam(40, 40, 0.5);
  const auto params = net::build_network(5);
  auto median = [&](int n0) {
    std::vector<double> t;
    for (int i = 0; i < 3; ++i) t.push_back(hybrid_solve(problem, n0, params).timing.total_seconds);
    std::sort(t.begin(), t.end());
    return t[1];
  };
  const double t5 = median(5), t40 = median(40);
  EXPECT_LE(t5, t40);
  EXPECT_LT(t5, time_simp(problem, 100));
}

// ---- PNG

TEST(Png, BlackMaterialWhiteVoid) {
  const auto p1 = scratch("ones.png"), p0 = scratch("zeros.png");
  render_png(DensityField(3, 5, 1.0), p1);
  render_png(DensityField(3, 5, 0.0), p0);
  const auto a = read_png(p1), b = read_png(p0);
  EXPECT_EQ(a.width, 5);
  EXPECT_EQ(a.height, 3);
  for (auto v : a.pixels) EXPECT_EQ(v, 0);
  for (auto v : b.pixels) EXPECT_EQ(v, 255);
}

TEST(Png, RoundTripRecoversQuantizedValues) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> d(0, 1);
  DensityField f(7, 4);
  for (double& v : f.values) v = d(rng);
  const auto p = scratch("rand.png");
  render_png(f, p);
  const auto img = read_png(p);
  for (int r = 0; r < 7; ++r)
    for (int c = 0; c < 4; ++c)
      EXPECT_EQ(img.pixels[r * 4 + c], static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - f(r, c)))));
}

TEST(Png, TilePadsWithVoid) {
  const DensityField a(2, 2, 1.0), b(3, 1, 1.0);
  const DensityField both[] = {a, b};
  const auto t = tile(both, 1);
  EXPECT_EQ(t.nely, 3);
  EXPECT_EQ(t.nelx, 4);
  EXPECT_EQ(t(2, 0), 0.0);  // padding under the shorter field
  EXPECT_EQ(t(0, 2), 0.0);  // gap column
  EXPECT_EQ(t(2, 3), 1.0);
}

TEST(Png, UnwritablePathIsIoError) {
  try {
    render_png(DensityField(2, 2, 0.5), "/nonexistent-dir/x.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
  }
}
