#pragma once

// Weights file: one line of JSON manifest terminated by '\n', followed by a
// float32 little-endian payload. Per layer the kernels (out, in, 3, 3) come
// first, then the biases, in manifest order.

#include <filesystem>

#include "json.hpp"
#include "topo/toponet.hpp"

namespace topo::net {

inline constexpr int kWeightsVersion = 1;

void save_weights(const NetworkParams& params, const std::filesystem::path& path,
                  const nlohmann::json& extra = nlohmann::json::object());
NetworkParams load_weights(const std::filesystem::path& path);

// Rounds every parameter to float32, matching a save/load round trip.
NetworkParams quantize(const NetworkParams& params);

}  // namespace topo::net
