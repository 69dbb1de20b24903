#pragma once

#include <vector>

#include <Eigen/Core>

#include "pry/image.hpp"
#include "pry/rng.hpp"

namespace pry::data {

// Training-time force augmentation, applied in normalized force units
// (newtons / sensor saturation): one multiplicative scale per episode, iid
// Gaussian noise per sample.
struct ForceAugmentParams {
  double scale_lo = 0.9;
  double scale_hi = 1.2;
  double noise_std = 0.005;
};

double sample_force_scale(Rng& rng, const ForceAugmentParams& p);

Eigen::Vector3d augment_force(const Eigen::Vector3d& normalized_force,
                              double episode_scale, Rng& noise_rng,
                              const ForceAugmentParams& p);

// Photometric jitter in the usual brightness/contrast/saturation/hue
// ranges, followed by a random crop. One Jitter is sampled per window so
// both frames shift together.
struct ImageAugmentParams {
  double brightness = 0.4;  // factor in [1-b, 1+b]
  double contrast = 0.4;
  double saturation = 0.2;
  double hue = 0.1;         // shift in [-h, h] (fraction of the hue circle)
};

struct Jitter {
  double brightness = 1.0;
  double contrast = 1.0;
  double saturation = 1.0;
  double hue = 0.0;
  int crop_top = 0;
  int crop_left = 0;
};

Jitter sample_jitter(Rng& rng, const ImageAugmentParams& p, int img_hw,
                     int crop_hw);

// Applies photometric jitter + crop. Output is float RGB in [0, 1],
// channel-major (c, h, w), ready for the encoder.
std::vector<float> augment_image(const Image8& img, const Jitter& jit,
                                 int crop_hw);

// Inference path: center crop, no jitter.
std::vector<float> prepare_image(const Image8& img, int crop_hw);

}  // namespace pry::data
