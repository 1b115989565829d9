#include "topo/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "topo/metrics.hpp"

namespace topo::eval {

double EvalTable::at(const std::string& method, int stop) const {
  const auto r = std::find(methods.begin(), methods.end(), method);
  const auto c = std::find(stop_iterations.begin(), stop_iterations.end(), stop);
  if (r == methods.end() || c == stop_iterations.end()) {
    fail(ErrorKind::invalid_input, "no cell for " + method + " at iteration " + std::to_string(stop));
  }
  return cells[r - methods.begin()][c - stop_iterations.begin()];
}

namespace {

fem::DensityField to_field(std::span<const float> values, int nely, int nelx) {
  fem::DensityField f(nely, nelx);
  std::copy(values.begin(), values.end(), f.values.begin());
  return f;
}

}  // namespace

EvalResult evaluate(const std::vector<NamedModel>& models, const probgen::DatasetReader& data,
                    std::span<const std::size_t> indices, std::span<const int> stop_iterations) {
  if (indices.empty()) fail(ErrorKind::invalid_input, "evaluation dataset is empty");
  if (!data.has_metadata()) fail(ErrorKind::invalid_input, "evaluation requires the dataset sidecar");
  const std::size_t n_methods = models.size() + 1;
  const std::size_t n_stops = stop_iterations.size();
  const std::size_t cell_count = n_methods * n_stops;

  for (const std::size_t idx : indices) {
    const int frames = data.shape(idx).frames;
    for (int n : stop_iterations) {
      if (n < 1 || n > frames) {
        fail(ErrorKind::invalid_parameter, "stop iteration " + std::to_string(n) + " outside record history");
      }
    }
  }

  // Per-record metric rows, reduced in index order afterwards.
  std::vector<std::vector<double>> acc_rows(indices.size()), iou_rows(indices.size());
  std::vector<std::string> errors(indices.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(indices.size()); ++r) {
    try {
      const auto record = indices[r];
      const probgen::FrameStack h = data.history(record);
      const double f0 = data.problems()[record].volume_fraction;
      const fem::DensityField target = threshold(to_field(h.frame(h.frames - 1), h.nely, h.nelx));
      auto& acc = acc_rows[r];
      auto& io = iou_rows[r];
      acc.assign(cell_count, 0.0);
      io.assign(cell_count, 0.0);
      for (std::size_t s = 0; s < n_stops; ++s) {
        const int n = stop_iterations[s];
        const fem::DensityField current = to_field(h.frame(n - 1), h.nely, h.nelx);
        const fem::DensityField baseline = threshold(current);
        const ConfusionCounts cb = confusion(baseline.values, target.values);
        acc[s] = binary_accuracy(cb);
        io[s] = iou(cb);
        if (models.empty()) continue;
        fem::DensityField update = current;
        for (std::size_t i = 0; i < update.size(); ++i) {
          update.values[i] -= n >= 2 ? static_cast<double>(h.frame(n - 2)[i]) : f0;
        }
        for (std::size_t m = 0; m < models.size(); ++m) {
          const fem::DensityField mask = threshold(net::predict(models[m].params, current, update));
          const ConfusionCounts cm = confusion(mask.values, target.values);
          acc[(m + 1) * n_stops + s] = binary_accuracy(cm);
          io[(m + 1) * n_stops + s] = iou(cm);
        }
      }
    } catch (const std::exception& e) {
      errors[r] = e.what();
    }
  }
  for (std::size_t r = 0; r < errors.size(); ++r) {
    if (!errors[r].empty()) fail(ErrorKind::invalid_input, "record " + std::to_string(indices[r]) + ": " + errors[r]);
  }

  auto reduce = [&](const std::vector<std::vector<double>>& rows, const std::string& metric) {
    EvalTable t;
    t.metric = metric;
    t.methods.push_back("Thresholding");
    for (const auto& m : models) t.methods.push_back(m.name);
    t.stop_iterations.assign(stop_iterations.begin(), stop_iterations.end());
    t.cells.assign(n_methods, std::vector<double>(n_stops, 0.0));
    for (const auto& row : rows) {
      for (std::size_t m = 0; m < n_methods; ++m)
        for (std::size_t s = 0; s < n_stops; ++s) t.cells[m][s] += row[m * n_stops + s];
    }
    for (auto& row : t.cells)
      for (double& v : row) v = 100.0 * v / static_cast<double>(rows.size());
    return t;
  };
  return {reduce(acc_rows, "binary_accuracy"), reduce(iou_rows, "iou")};
}

EvalResult transfer_eval(const std::vector<NamedModel>& models, const probgen::DatasetReader& heat_data,
                         std::span<const std::size_t> indices, std::span<const int> stop_iterations) {
  for (const auto& p : heat_data.problems()) {
    if (p.physics != fem::Physics::heat) fail(ErrorKind::invalid_input, "transfer evaluation expects heat problems");
  }
  return evaluate(models, heat_data, indices, stop_iterations);
}

std::string format_table(const EvalTable& table) {
  std::size_t name_width = 6;
  for (const auto& m : table.methods) name_width = std::max(name_width, m.size());
  std::ostringstream out;
  char buf[32];
  out << table.metric << '\n';
  out << std::string(name_width, ' ') << " | Iteration\n";
  out << "Method" << std::string(name_width - 6, ' ') << " |";
  for (int n : table.stop_iterations) {
    std::snprintf(buf, sizeof buf, " %6d", n);
    out << buf;
  }
  out << '\n' << std::string(name_width + 2 + 7 * table.stop_iterations.size(), '-') << '\n';
  for (std::size_t m = 0; m < table.methods.size(); ++m) {
    out << table.methods[m] << std::string(name_width - table.methods[m].size(), ' ') << " |";
    for (double v : table.cells[m]) {
      std::snprintf(buf, sizeof buf, " %6.1f", v);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

std::string to_jsonl(const EvalTable& table) {
  std::ostringstream out;
  for (std::size_t m = 0; m < table.methods.size(); ++m) {
    for (std::size_t s = 0; s < table.stop_iterations.size(); ++s) {
      out << nlohmann::json{{"metric", table.metric},
                            {"method", table.methods[m]},
                            {"iteration", table.stop_iterations[s]},
                            {"value", table.cells[m][s]}}
                 .dump()
          << '\n';
    }
  }
  return out.str();
}

}  // namespace topo::eval
