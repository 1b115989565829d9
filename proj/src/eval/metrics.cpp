#include "topo/metrics.hpp"

namespace topo::eval {

ConfusionCounts confusion(std::span<const double> pred_mask, std::span<const double> true_mask) {
  if (pred_mask.size() != true_mask.size()) fail(ErrorKind::shape, "mask sizes differ");
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred_mask.size(); ++i) {
    const double p = pred_mask[i];
    const double t = true_mask[i];
    if ((p != 0.0 && p != 1.0) || (t != 0.0 && t != 1.0)) fail(ErrorKind::invalid_input, "masks must be binary");
    if (t == 0.0) {
      (p == 0.0 ? c.w00 : c.w01)++;
    } else {
      (p == 0.0 ? c.w10 : c.w11)++;
    }
  }
  return c;
}

double binary_accuracy(const ConfusionCounts& c) {
  if (c.total() == 0) fail(ErrorKind::invalid_input, "empty masks");
  return static_cast<double>(c.w00 + c.w11) / static_cast<double>(c.n0() + c.n1());
}

double iou(const ConfusionCounts& c) {
  if (c.total() == 0) fail(ErrorKind::invalid_input, "empty masks");
  auto ratio = [](std::size_t hit, std::size_t denominator) {
    return denominator == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(denominator);
  };
  return 0.5 * (ratio(c.w00, c.n0() + c.w10) + ratio(c.w11, c.n1() + c.w01));
}

namespace {

void require_same_grid(const DensityField& a, const DensityField& b) {
  if (a.nely != b.nely || a.nelx != b.nelx) fail(ErrorKind::shape, "mask shapes differ");
}

}  // namespace

double binary_accuracy(const DensityField& pred_mask, const DensityField& true_mask) {
  require_same_grid(pred_mask, true_mask);
  return binary_accuracy(confusion(pred_mask.values, true_mask.values));
}

double iou(const DensityField& pred_mask, const DensityField& true_mask) {
  require_same_grid(pred_mask, true_mask);
  return iou(confusion(pred_mask.values, true_mask.values));
}

DensityField threshold(const DensityField& field, double level) {
  DensityField mask(field.nely, field.nelx);
  for (std::size_t i = 0; i < field.size(); ++i) mask.values[i] = field.values[i] >= level ? 1.0 : 0.0;
  return mask;
}

}  // namespace topo::eval
