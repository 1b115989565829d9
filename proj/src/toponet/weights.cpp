#include "topo/weights.hpp"

#include <bit>
#include <fstream>
#include <string>

namespace topo::net {

static_assert(std::endian::native == std::endian::little, "weights I/O assumes a little-endian host");

namespace {

nlohmann::json manifest_for(const NetworkParams& params) {
  nlohmann::json layers = nlohmann::json::array();
  std::size_t scalars = 0;
  for (int i = 0; i < kLayerCount; ++i) {
    const auto& l = params[i];
    layers.push_back({{"name", std::string(kArchitecture[i].name)},
                      {"kernel_shape", {l.out_channels, l.in_channels, 3, 3}},
                      {"bias_shape", {l.out_channels}}});
    scalars += l.parameter_count();
  }
  return {{"format", "topo-weights"},
          {"version", kWeightsVersion},
          {"dtype", "float32-le"},
          {"layers", layers},
          {"parameter_count", scalars},
          {"payload_bytes", scalars * sizeof(float)}};
}

}  // namespace

void save_weights(const NetworkParams& params, const std::filesystem::path& path, const nlohmann::json& extra) {
  nlohmann::json manifest = manifest_for(params);
  if (!extra.empty()) manifest["info"] = extra;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out << manifest.dump() << '\n';
  for (const auto& l : params.layers) {
    for (double v : l.kernels) {
      const float f = static_cast<float>(v);
      out.write(reinterpret_cast<const char*>(&f), sizeof f);
    }
    for (double v : l.bias) {
      const float f = static_cast<float>(v);
      out.write(reinterpret_cast<const char*>(&f), sizeof f);
    }
  }
  if (!out) fail(ErrorKind::io, "write failed on " + path.string());
}

NetworkParams load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::format, "missing weights manifest in " + path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::format, std::string("malformed weights manifest: ") + e.what());
  }
  if (manifest.value("format", "") != "topo-weights") fail(ErrorKind::format, "not a weights file");
  if (manifest.value("version", -1) != kWeightsVersion) fail(ErrorKind::format, "unsupported weights version");

  NetworkParams params = NetworkParams::zeros();
  const auto& layers = manifest.at("layers");
  if (!layers.is_array() || layers.size() != kLayerCount) {
    fail(ErrorKind::format, "manifest lists " + std::to_string(layers.size()) + " layers, expected " +
                                std::to_string(kLayerCount));
  }
  for (int i = 0; i < kLayerCount; ++i) {
    const auto& spec = kArchitecture[i];
    const auto& entry = layers[i];
    const std::vector<int> expected_kernel = {spec.out_channels, spec.in_channels, 3, 3};
    if (entry.value("name", "") != spec.name || entry.at("kernel_shape").get<std::vector<int>>() != expected_kernel ||
        entry.at("bias_shape").get<std::vector<int>>() != std::vector<int>{spec.out_channels}) {
      fail(ErrorKind::format, "manifest layer " + std::to_string(i) + " (" + entry.value("name", "?") +
                                  ") does not match architecture layer " + std::string(spec.name));
    }
  }

  const std::size_t expected = kParameterCount * sizeof(float);
  const auto start = in.tellg();
  in.seekg(0, std::ios::end);
  const auto actual = static_cast<std::size_t>(in.tellg() - start);
  if (actual != expected) {
    fail(ErrorKind::format, "weights payload holds " + std::to_string(actual) + " bytes, expected " +
                                std::to_string(expected));
  }
  in.seekg(start);
  std::vector<float> payload(kParameterCount);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(expected));
  if (!in) fail(ErrorKind::io, "short read of weights payload");
  std::size_t pos = 0;
  for (auto& l : params.layers) {
    for (double& v : l.kernels) v = payload[pos++];
    for (double& v : l.bias) v = payload[pos++];
  }
  return params;
}

NetworkParams quantize(const NetworkParams& params) {
  NetworkParams q = params;
  for (auto& l : q.layers) {
    for (double& v : l.kernels) v = static_cast<float>(v);
    for (double& v : l.bias) v = static_cast<float>(v);
  }
  return q;
}

}  // namespace topo::net
