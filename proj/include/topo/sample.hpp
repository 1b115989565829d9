#pragma once

#include <span>

#include "topo/dataset.hpp"
#include "topo/tensor.hpp"

namespace topo::net {

using nn::Tensor;

// Element g of the dihedral group D4, g in 0..7: rotate by (g % 4) quarter
// turns counter-clockwise, then mirror left-right when g >= 4.
Tensor apply_d4(const Tensor& x, int transform_id);
Tensor rotate90(const Tensor& x);

struct TrainingSample {
  Tensor density;  // X_k, 1 x H x W
  Tensor update;   // X_k - X_{k-1}
  Tensor target;   // final frame thresholded at 0.5

  Tensor input() const;  // 2-channel stack of density and update
};

// Frame k is the density after k updates, with frame 0 the uniform field at
// the volume fraction. Requires 1 <= k <= frames - 1.
TrainingSample make_sample(const probgen::FrameStack& history, double volume_fraction, int k,
                           int transform_id);

// Reads only the three frames a sample needs.
TrainingSample make_sample(const probgen::DatasetReader& reader, std::size_t index, int k,
                           int transform_id);

}  // namespace topo::net
