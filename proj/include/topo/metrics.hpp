#pragma once

#include <cstddef>
#include <span>

#include "topo/fem.hpp"

namespace topo::eval {

using fem::DensityField;

// w[t][p]: pixels of true class t predicted as class p.
struct ConfusionCounts {
  std::size_t w00 = 0;
  std::size_t w01 = 0;
  std::size_t w10 = 0;
  std::size_t w11 = 0;

  std::size_t n0() const { return w00 + w01; }
  std::size_t n1() const { return w11 + w10; }
  std::size_t total() const { return w00 + w01 + w10 + w11; }
};

ConfusionCounts confusion(std::span<const double> pred_mask, std::span<const double> true_mask);

// (w00 + w11) / (n0 + n1)
double binary_accuracy(const ConfusionCounts& c);
// 1/2 [w00 / (n0 + w10) + w11 / (n1 + w01)]; a class absent from both masks
// contributes 1.
double iou(const ConfusionCounts& c);

double binary_accuracy(const DensityField& pred_mask, const DensityField& true_mask);
double iou(const DensityField& pred_mask, const DensityField& true_mask);

// 1 where value >= level, else 0.
DensityField threshold(const DensityField& field, double level = 0.5);

}  // namespace topo::eval
