#include "pry/image.hpp"

#include <algorithm>
#include <cstdio>
#include <string>

namespace pry {

void Image8::set(int r, int c, const Color& color) {
  u8* p = px(r, c);
  p[0] = quantize8(color[0]);
  p[1] = quantize8(color[1]);
  p[2] = quantize8(color[2]);
}

Image8 crop(const Image8& img, int top, int left, int ch, int cw) {
  require(top >= 0 && left >= 0 && top + ch <= img.height &&
              left + cw <= img.width,
          "crop: window out of bounds");
  Image8 out(ch, cw);
  for (int r = 0; r < ch; ++r) {
    const u8* src = img.px(top + r, left);
    u8* dst = out.px(r, 0);
    std::copy(src, src + size_t(cw) * 3, dst);
  }
  return out;
}

Image8 center_crop(const Image8& img, int ch, int cw) {
  return crop(img, (img.height - ch) / 2, (img.width - cw) / 2, ch, cw);
}

void write_ppm(const Image8& img, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  require(f != nullptr, "write_ppm: cannot open " + path);
  std::fprintf(f, "P6\n%d %d\n255\n", img.width, img.height);
  std::fwrite(img.data.data(), 1, img.data.size(), f);
  std::fclose(f);
}

}  // namespace pry
