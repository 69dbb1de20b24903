#include "pry/data/augment.hpp"

#include <algorithm>
#include <cmath>

namespace pry::data {
namespace {

struct Rgb {
  double r, g, b;
};

double luma(const Rgb& c) { return 0.299 * c.r + 0.587 * c.g + 0.114 * c.b; }

Rgb hue_shift(const Rgb& c, double shift) {
  // rgb -> hsv -> rotate hue -> rgb
  const double mx = std::max({c.r, c.g, c.b});
  const double mn = std::min({c.r, c.g, c.b});
  const double d = mx - mn;
  double h = 0.0;
  if (d > 1e-12) {
    if (mx == c.r)
      h = std::fmod((c.g - c.b) / d, 6.0);
    else if (mx == c.g)
      h = (c.b - c.r) / d + 2.0;
    else
      h = (c.r - c.g) / d + 4.0;
    h /= 6.0;
    if (h < 0) h += 1.0;
  }
  const double s = mx <= 1e-12 ? 0.0 : d / mx;
  const double v = mx;
  h = std::fmod(h + shift + 1.0, 1.0);
  const double hh = h * 6.0;
  const int i = static_cast<int>(hh) % 6;
  const double f = hh - std::floor(hh);
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (i) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

}  // namespace

double sample_force_scale(Rng& rng, const ForceAugmentParams& p) {
  return rng.uniform(p.scale_lo, p.scale_hi);
}

Eigen::Vector3d augment_force(const Eigen::Vector3d& normalized_force,
                              double episode_scale, Rng& noise_rng,
                              const ForceAugmentParams& p) {
  Eigen::Vector3d out = episode_scale * normalized_force;
  for (int i = 0; i < 3; ++i) out(i) += p.noise_std * noise_rng.normal();
  return out;
}

Jitter sample_jitter(Rng& rng, const ImageAugmentParams& p, int img_hw,
                     int crop_hw) {
  require(crop_hw <= img_hw, "sample_jitter: crop larger than image");
  Jitter j;
  j.brightness = rng.uniform(1.0 - p.brightness, 1.0 + p.brightness);
  j.contrast = rng.uniform(1.0 - p.contrast, 1.0 + p.contrast);
  j.saturation = rng.uniform(1.0 - p.saturation, 1.0 + p.saturation);
  j.hue = rng.uniform(-p.hue, p.hue);
  const int slack = img_hw - crop_hw;
  j.crop_top = static_cast<int>(rng.uniform_index(slack + 1));
  j.crop_left = static_cast<int>(rng.uniform_index(slack + 1));
  return j;
}

std::vector<float> augment_image(const Image8& img, const Jitter& jit,
                                 int crop_hw) {
  const Image8 view = crop(img, jit.crop_top, jit.crop_left, crop_hw, crop_hw);
  // contrast pivots on the mean luminance of the cropped view
  double mean_luma = 0.0;
  for (int r = 0; r < crop_hw; ++r)
    for (int c = 0; c < crop_hw; ++c) {
      const u8* px = view.px(r, c);
      mean_luma += luma({px[0] / 255.0, px[1] / 255.0, px[2] / 255.0});
    }
  mean_luma /= double(crop_hw) * crop_hw;

  std::vector<float> out(size_t(3) * crop_hw * crop_hw);
  const size_t plane = size_t(crop_hw) * crop_hw;
  for (int r = 0; r < crop_hw; ++r)
    for (int c = 0; c < crop_hw; ++c) {
      const u8* px = view.px(r, c);
      Rgb v{px[0] / 255.0, px[1] / 255.0, px[2] / 255.0};
      v = {v.r * jit.brightness, v.g * jit.brightness, v.b * jit.brightness};
      v = {mean_luma + (v.r - mean_luma) * jit.contrast,
           mean_luma + (v.g - mean_luma) * jit.contrast,
           mean_luma + (v.b - mean_luma) * jit.contrast};
      const double gray = luma(v);
      v = {gray + (v.r - gray) * jit.saturation,
           gray + (v.g - gray) * jit.saturation,
           gray + (v.b - gray) * jit.saturation};
      if (jit.hue != 0.0) {
        v = {std::clamp(v.r, 0.0, 1.0), std::clamp(v.g, 0.0, 1.0),
             std::clamp(v.b, 0.0, 1.0)};
        v = hue_shift(v, jit.hue);
      }
      const size_t at = size_t(r) * crop_hw + c;
      out[0 * plane + at] = static_cast<float>(std::clamp(v.r, 0.0, 1.0));
      out[1 * plane + at] = static_cast<float>(std::clamp(v.g, 0.0, 1.0));
      out[2 * plane + at] = static_cast<float>(std::clamp(v.b, 0.0, 1.0));
    }
  return out;
}

std::vector<float> prepare_image(const Image8& img, int crop_hw) {
  Jitter id;
  id.crop_top = (img.height - crop_hw) / 2;
  id.crop_left = (img.width - crop_hw) / 2;
  return augment_image(img, id, crop_hw);
}

}  // namespace pry::data
