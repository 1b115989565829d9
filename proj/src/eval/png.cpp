#include "topo/png.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include <png.h>

namespace topo::eval {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void render_png(const fem::DensityField& field, const std::filesystem::path& path) {
  if (field.nelx < 1 || field.nely < 1) fail(ErrorKind::invalid_input, "cannot render an empty field");
  FilePtr file(std::fopen(path.string().c_str(), "wb"));
  if (!file) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::io, "libpng initialisation failed");
  }
  std::vector<png_byte> row(field.nelx);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::io, "libpng error while writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, field.nelx, field.nely, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < field.nely; ++y) {
    for (int x = 0; x < field.nelx; ++x) {
      const double v = std::clamp(field(y, x), 0.0, 1.0);
      row[x] = static_cast<png_byte>(std::lround(255.0 * (1.0 - v)));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

GrayImage read_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) fail(ErrorKind::io, "cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::io, "libpng initialisation failed");
  }
  GrayImage img;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::format, "libpng error while reading " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY || png_get_bit_depth(png, info) != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::format, path.string() + " is not 8-bit grayscale");
  }
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  for (int y = 0; y < img.height; ++y) png_read_row(png, img.pixels.data() + static_cast<std::size_t>(y) * img.width, nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

fem::DensityField tile(std::span<const fem::DensityField> fields, int gap) {
  if (fields.empty()) fail(ErrorKind::invalid_input, "nothing to tile");
  int width = 0;
  int height = 0;
  for (const auto& f : fields) {
    width += f.nelx;
    height = std::max(height, f.nely);
  }
  width += gap * static_cast<int>(fields.size() - 1);
  fem::DensityField out(height, width, 0.0);
  int x0 = 0;
  for (const auto& f : fields) {
    for (int y = 0; y < f.nely; ++y)
      for (int x = 0; x < f.nelx; ++x) out(y, x0 + x) = f(y, x);
    x0 += f.nelx + gap;
  }
  return out;
}

}  // namespace topo::eval
