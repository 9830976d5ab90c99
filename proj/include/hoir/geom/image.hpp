#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hoir/common.hpp"

namespace hoir::geom {

// Planar float image: channel-major, row-major within each channel,
// row 0 at the top.
struct Image {
  int width = 0, height = 0, channels = 0;
  std::vector<float> data;

  Image() = default;
  Image(int w, int h, int c, float fill = 0.0f)
      : width(w), height(h), channels(c), data(static_cast<size_t>(w) * h * c, fill) {}

  size_t plane() const { return static_cast<size_t>(width) * height; }
  float& at(int c, int x, int y) { return data[c * plane() + static_cast<size_t>(y) * width + x]; }
  float at(int c, int x, int y) const {
    return data[c * plane() + static_cast<size_t>(y) * width + x];
  }
};

// Binary mask, one byte per pixel, 0 or 255, row 0 at the top.
struct Mask {
  int width = 0, height = 0;
  std::vector<uint8_t> data;

  Mask() = default;
  Mask(int w, int h, bool fill = false)
      : width(w), height(h), data(static_cast<size_t>(w) * h, fill ? 255 : 0) {}

  bool get(int x, int y) const { return data[static_cast<size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) { data[static_cast<size_t>(y) * width + x] = v ? 255 : 0; }
  size_t count() const;
};

// a AND NOT b, elementwise; sizes must match.
Mask mask_subtract(const Mask& a, const Mask& b);

// Multi-channel PFM: stored as a grayscale "Pf" file whose height is
// channels*height, channels stacked top-to-bottom in channel order and rows
// written bottom-up per the format, scale -1.0 (little-endian).
void write_pfm(const std::string& path, const Image& img);
// `channels` must match the writer's; the stacked height must divide evenly.
Image read_pfm(const std::string& path, int channels = 1);

// 8-bit grayscale PNG (color type 0), no interlace.
void write_png_gray(const std::string& path, const Mask& mask);
Mask read_png_gray(const std::string& path);

}  // namespace hoir::geom
