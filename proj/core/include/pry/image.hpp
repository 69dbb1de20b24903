#pragma once

#include <array>
#include <vector>

#include "pry/common.hpp"

namespace pry {

using Color = std::array<double, 3>;  // rgb in [0, 1]

// 8-bit RGB image, row-major, origin at the top-left pixel.
struct Image8 {
  int height = 0;
  int width = 0;
  std::vector<u8> data;  // height*width*3

  Image8() = default;
  Image8(int h, int w) : height(h), width(w), data(size_t(h) * w * 3, 0) {}

  u8* px(int r, int c) { return data.data() + 3 * (size_t(r) * width + c); }
  const u8* px(int r, int c) const {
    return data.data() + 3 * (size_t(r) * width + c);
  }

  void set(int r, int c, const Color& color);
  bool operator==(const Image8&) const = default;
};

// Center crop. Requires crop size <= image size.
Image8 center_crop(const Image8& img, int ch, int cw);

// Crop with explicit top-left corner (used by random-crop augmentation).
Image8 crop(const Image8& img, int top, int left, int ch, int cw);

// Quantize a [0,1] double to u8 with rounding.
inline u8 quantize8(double v) {
  if (v <= 0.0) return 0;
  if (v >= 1.0) return 255;
  return static_cast<u8>(v * 255.0 + 0.5);
}

// Minimal PPM (P6) io, handy for debugging and the plot tool.
void write_ppm(const Image8& img, const std::string& path);

}  // namespace pry
