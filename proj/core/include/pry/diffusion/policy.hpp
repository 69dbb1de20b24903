#pragma once

#include "pry/diffusion/schedule.hpp"
#include "pry/diffusion/unet.hpp"
#include "pry/encoder/observation_encoder.hpp"
#include "pry/hashing.hpp"

namespace pry::diffusion {

constexpr int kActionDim = 9;

// Encoder + noise-prediction U-Net with a shared parameter store. Parameter
// registration order is fixed by construction order, which is what the
// checkpoint format relies on.
template <class S>
class PolicyModel {
  // Declared (and therefore initialized) before enc/unet, both of which call
  // init_rng() from the member initializer list.
  std::vector<std::unique_ptr<Rng>> rngs_;

 public:
  nn::ParamStore<S> params;
  encoder::ObservationEncoder<S> enc;
  CondUnet1d<S> unet;
  Variant variant;
  ModelConfig model;

  PolicyModel(const ExperimentConfig& cfg, Variant v, u64 init_seed)
      : enc(params, cfg, v, init_rng(init_seed)),
        unet(params, cfg.model, enc.cond_dim(), kActionDim,
             init_rng(init_seed)),
        variant(v),
        model(cfg.model) {}

  // images [B*n, 3, s, s], force [B*n, 4], poses [B, n*9],
  // noisy actions [B, 9, T], steps (diffusion indices, one per sample).
  nn::Var<S> predict_noise(nn::Graph<S>& g, nn::Var<S> images,
                           nn::Var<S> force, nn::Var<S> poses,
                           nn::Var<S> noisy, const std::vector<int>& steps) {
    nn::Var<S> cond = enc(g, images, force, poses);
    nn::Var<S> se =
        g.input(step_embedding<S>(steps, model.step_embed_dim));
    return unet(g, noisy, se, cond);
  }

 private:
  // One generator per module family so adding params to one module does not
  // reshuffle all downstream initializations.
  Rng& init_rng(u64 seed) {
    rngs_.push_back(
        std::make_unique<Rng>(substream_seed(seed, "init", rngs_.size())));
    return *rngs_.back();
  }
};

}  // namespace pry::diffusion
