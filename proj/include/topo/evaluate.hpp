#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "topo/dataset.hpp"
#include "topo/toponet.hpp"

namespace topo::eval {

inline const std::vector<int> kStopIterations = {5, 10, 15, 20, 30, 40, 50, 60, 80};

struct NamedModel {
  std::string name;  // e.g. "CNN P(10)"
  net::NetworkParams params;
};

// Rows are methods, columns stop iterations, cells percentages.
struct EvalTable {
  std::string metric;
  std::vector<std::string> methods;
  std::vector<int> stop_iterations;
  std::vector<std::vector<double>> cells;

  double at(const std::string& method, int stop) const;
  bool operator==(const EvalTable&) const = default;
};

struct EvalResult {
  EvalTable accuracy;
  EvalTable iou;
};

// Mean metrics over the given records. The thresholding baseline is always
// the first row. Targets are the final frames thresholded at 0.5; CNN masks
// are network outputs thresholded at 0.5.
EvalResult evaluate(const std::vector<NamedModel>& models, const probgen::DatasetReader& data,
                    std::span<const std::size_t> indices, std::span<const int> stop_iterations);

// Mechanically trained models on a heat-conduction dataset.
EvalResult transfer_eval(const std::vector<NamedModel>& models, const probgen::DatasetReader& heat_data,
                         std::span<const std::size_t> indices, std::span<const int> stop_iterations);

// Aligned text table: one row per method, one column per stop iteration.
std::string format_table(const EvalTable& table);
// One JSON object per line: {"metric", "method", "iteration", "value"}.
std::string to_jsonl(const EvalTable& table);

}  // namespace topo::eval
