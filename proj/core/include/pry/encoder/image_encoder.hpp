#pragma once

#include "pry/config.hpp"
#include "pry/nn/modules.hpp"

namespace pry::encoder {

template <class S>
struct ImageFeatures {
  nn::Var<S> tokens;  // [B, N, d] for cross-attention
  nn::Var<S> pooled;  // [B, d + 2*c2]: GAP over tokens ++ spatial softmax
};

// Reduced residual encoder: k5/s2 stem, four k3 residual blocks (two of
// them strided), then a 1x1 projection to the token dim. crop/8 per side,
// so a 56-pixel crop yields 7x7 = 49 tokens.
template <class S>
class ImageEncoder {
 public:
  ImageEncoder(nn::ParamStore<S>& ps, const ModelConfig& m, Rng& rng)
      : stem_(ps, "enc.stem", 3, m.cnn_channels[0], 5, 2, rng),
        gn0_(ps, "enc.n0", m.cnn_channels[0], m.gn_groups),
        b1_(ps, "enc.b1", m.cnn_channels[0], m.cnn_channels[1], 2,
            m.gn_groups, rng),
        b2_(ps, "enc.b2", m.cnn_channels[1], m.cnn_channels[1], 1,
            m.gn_groups, rng),
        b3_(ps, "enc.b3", m.cnn_channels[1], m.cnn_channels[2], 2,
            m.gn_groups, rng),
        b4_(ps, "enc.b4", m.cnn_channels[2], m.cnn_channels[2], 1,
            m.gn_groups, rng),
        head_(ps, "enc.head", m.cnn_channels[2], m.embed_dim, 1, 1, rng),
        c2_(m.cnn_channels[2]),
        d_(m.embed_dim) {}

  ImageFeatures<S> operator()(nn::Graph<S>& g, nn::Var<S> img) const {
    nn::Var<S> h = nn::mish(g, gn0_(g, stem_(g, img)));
    h = b1_(g, h);
    h = b2_(g, h);
    h = b3_(g, h);
    h = b4_(g, h);
    nn::Var<S> dmap = head_(g, h);  // [B, d, s/8, s/8]
    ImageFeatures<S> out;
    out.tokens = nn::tokens_from_map(g, dmap);
    out.pooled = nn::concat_cols(
        g, {nn::global_avg_pool2d(g, dmap), nn::spatial_softmax(g, h)});
    return out;
  }

  int pooled_dim() const { return d_ + 2 * c2_; }
  int token_dim() const { return d_; }

 private:
  nn::Conv2d<S> stem_;
  nn::GroupNorm<S> gn0_;
  nn::ResBlock2d<S> b1_, b2_, b3_, b4_;
  nn::Conv2d<S> head_;
  int c2_, d_;
};

}  // namespace pry::encoder
