#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "topo/fem.hpp"

namespace topo::eval {

// 8-bit grayscale, value v -> luminance round(255 (1 - v)): material black, void white.
void render_png(const fem::DensityField& field, const std::filesystem::path& path);

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

GrayImage read_png(const std::filesystem::path& path);

// Places fields side by side separated by `gap` void columns; rows are
// padded with void to the tallest field.
fem::DensityField tile(std::span<const fem::DensityField> fields, int gap = 2);

}  // namespace topo::eval
