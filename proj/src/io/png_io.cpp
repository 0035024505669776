#include "lgan/io/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <vector>

namespace lgan::io {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

uint8_t to_byte(float v, float lo, float hi) {
  const float t = (v - lo) / (hi - lo) * 255.f;
  const float r = std::round(t);
  return static_cast<uint8_t>(r < 0.f ? 0.f : (r > 255.f ? 255.f : r));
}

void write_png(const std::string& path, int64_t h, int64_t w, int channels,
               const std::vector<uint8_t>& bytes) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw std::runtime_error("png: cannot open for writing: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("png: write failed: " + path);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(static_cast<size_t>(h));
  for (int64_t y = 0; y < h; ++y) rows[y] = const_cast<png_bytep>(bytes.data() + y * w * channels);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void read_png(const std::string& path, int want_channels, int64_t& h, int64_t& w,
              std::vector<uint8_t>& bytes) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw std::runtime_error("png: cannot open: " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("png: read failed: " + path);
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  w = png_get_image_width(png, info);
  h = png_get_image_height(png, info);
  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (want_channels == 3) {
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  } else {
    if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
        color == PNG_COLOR_TYPE_PALETTE) {
      png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    }
  }
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  bytes.resize(static_cast<size_t>(h * w * want_channels));
  std::vector<png_bytep> rows(static_cast<size_t>(h));
  for (int64_t y = 0; y < h; ++y) rows[y] = bytes.data() + y * w * want_channels;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
}

}  // namespace

void write_png_rgb(const std::string& path, const Tensor<float>& image) {
  if (image.shape().size() != 3 || image.dim(0) != 3) {
    throw std::invalid_argument("write_png_rgb: expected [3,H,W], got " + shape_str(image.shape()));
  }
  const int64_t h = image.dim(1), w = image.dim(2), plane = h * w;
  std::vector<uint8_t> bytes(static_cast<size_t>(plane * 3));
  const auto& d = image.data();
  for (int64_t p = 0; p < plane; ++p) {
    bytes[p * 3 + 0] = to_byte(d[p], -1.f, 1.f);
    bytes[p * 3 + 1] = to_byte(d[plane + p], -1.f, 1.f);
    bytes[p * 3 + 2] = to_byte(d[2 * plane + p], -1.f, 1.f);
  }
  write_png(path, h, w, 3, bytes);
}

void write_png_gray(const std::string& path, const Tensor<float>& mask) {
  const auto& s = mask.shape();
  int64_t h, w;
  if (s.size() == 3 && s[0] == 1) {
    h = s[1];
    w = s[2];
  } else if (s.size() == 2) {
    h = s[0];
    w = s[1];
  } else {
    throw std::invalid_argument("write_png_gray: expected [1,H,W] or [H,W], got " + shape_str(s));
  }
  std::vector<uint8_t> bytes(static_cast<size_t>(h * w));
  for (int64_t p = 0; p < h * w; ++p) bytes[p] = to_byte(mask.data()[p], 0.f, 1.f);
  write_png(path, h, w, 1, bytes);
}

Tensor<float> read_png_rgb(const std::string& path) {
  int64_t h, w;
  std::vector<uint8_t> bytes;
  read_png(path, 3, h, w, bytes);
  std::vector<float> v(static_cast<size_t>(3 * h * w));
  const int64_t plane = h * w;
  for (int64_t p = 0; p < plane; ++p) {
    v[p] = bytes[p * 3 + 0] / 127.5f - 1.f;
    v[plane + p] = bytes[p * 3 + 1] / 127.5f - 1.f;
    v[2 * plane + p] = bytes[p * 3 + 2] / 127.5f - 1.f;
  }
  return Tensor<float>::leaf({3, h, w}, std::move(v));
}

Tensor<float> read_png_gray(const std::string& path) {
  int64_t h, w;
  std::vector<uint8_t> bytes;
  read_png(path, 1, h, w, bytes);
  std::vector<float> v(static_cast<size_t>(h * w));
  for (int64_t p = 0; p < h * w; ++p) v[p] = bytes[p] / 255.f;
  return Tensor<float>::leaf({1, h, w}, std::move(v));
}

}  // namespace lgan::io
