#pragma once

#include "pry/config.hpp"
#include "pry/nn/modules.hpp"

namespace pry::diffusion {

// conv-GN-Mish, FiLM from the conditioning vector, conv-GN-Mish, residual.
template <class S>
struct CondResBlock1d {
  nn::Conv1d<S> conv1, conv2, skip;
  nn::GroupNorm<S> gn1, gn2;
  nn::Linear<S> film;
  bool projected = false;

  CondResBlock1d() = default;
  CondResBlock1d(nn::ParamStore<S>& ps, const std::string& name, int ci,
                 int co, int k, int cond_dim, int gn_groups, Rng& rng)
      : conv1(ps, name + ".c1", ci, co, k, 1, rng),
        conv2(ps, name + ".c2", co, co, k, 1, rng),
        gn1(ps, name + ".n1", co, gn_groups),
        gn2(ps, name + ".n2", co, gn_groups),
        film(ps, name + ".f", cond_dim, 2 * co, rng, true, 1.0),
        projected(ci != co) {
    if (projected) skip = nn::Conv1d<S>(ps, name + ".sk", ci, co, 1, 1, rng);
  }

  nn::Var<S> operator()(nn::Graph<S>& g, nn::Var<S> x,
                        nn::Var<S> cond) const {
    nn::Var<S> h = nn::mish(g, gn1(g, conv1(g, x)));
    h = nn::film1d(g, h, film(g, cond));
    h = nn::mish(g, gn2(g, conv2(g, h)));
    return nn::add(g, h, projected ? skip(g, x) : x);
  }
};

// Sinusoidal embedding of the diffusion step index (computed host-side;
// the embedding is a fixed function, only the MLP after it learns).
template <class S>
nn::Tensor<S> step_embedding(const std::vector<int>& steps, int dim) {
  require(dim >= 2 && dim % 2 == 0, "step_embedding: dim must be even");
  const int half = dim / 2;
  nn::Tensor<S> out({int(steps.size()), dim});
  for (size_t b = 0; b < steps.size(); ++b)
    for (int i = 0; i < half; ++i) {
      const double freq =
          std::exp(-std::log(10000.0) * double(i) / std::max(1, half - 1));
      const double a = double(steps[b]) * freq;
      out.data[b * size_t(dim) + size_t(i)] = S(std::sin(a));
      out.data[b * size_t(dim) + size_t(half + i)] = S(std::cos(a));
    }
  return out;
}

// 1-d conditional U-Net over the action horizon: two strided levels and a
// mid block, FiLM conditioning in every residual block, nearest-neighbor
// upsampling, and a zero-initialized output head so the untrained net
// predicts zero noise.
template <class S>
class CondUnet1d {
 public:
  CondUnet1d(nn::ParamStore<S>& ps, const ModelConfig& m, int cond_dim,
             int action_dim, Rng& rng)
      : emb1_(ps, "unet.e1", m.step_embed_dim, 4 * m.step_embed_dim, rng),
        emb2_(ps, "unet.e2", 4 * m.step_embed_dim, 4 * m.step_embed_dim, rng,
              true, 1.0),
        step_dim_(m.step_embed_dim) {
    const int c0 = m.unet_channels[0], c1 = m.unet_channels[1],
              c2 = m.unet_channels[2];
    const int k = 5, gg = m.gn_groups;
    const int full = cond_dim + 4 * m.step_embed_dim;
    down1_ = CondResBlock1d<S>(ps, "unet.d1", action_dim, c0, k, full, gg, rng);
    downc1_ = nn::Conv1d<S>(ps, "unet.dc1", c0, c0, 3, 2, rng);
    down2_ = CondResBlock1d<S>(ps, "unet.d2", c0, c1, k, full, gg, rng);
    downc2_ = nn::Conv1d<S>(ps, "unet.dc2", c1, c1, 3, 2, rng);
    mid_ = CondResBlock1d<S>(ps, "unet.mid", c1, c2, k, full, gg, rng);
    upc1_ = nn::Conv1d<S>(ps, "unet.uc1", c2, c1, 3, 1, rng);
    up1_ = CondResBlock1d<S>(ps, "unet.u1", 2 * c1, c1, k, full, gg, rng);
    upc2_ = nn::Conv1d<S>(ps, "unet.uc2", c1, c0, 3, 1, rng);
    up2_ = CondResBlock1d<S>(ps, "unet.u2", 2 * c0, c0, k, full, gg, rng);
    final_conv_ = nn::Conv1d<S>(ps, "unet.fc", c0, c0, k, 1, rng);
    final_gn_ = nn::GroupNorm<S>(ps, "unet.fn", c0, gg);
    head_ = nn::Conv1d<S>(ps, "unet.head", c0, action_dim, 1, 1, rng);
    head_.zero_init();
  }

  // x [B, action_dim, T], step_emb [B, step_embed_dim], cond [B, cond_dim]
  nn::Var<S> operator()(nn::Graph<S>& g, nn::Var<S> x, nn::Var<S> step_emb,
                        nn::Var<S> cond) const {
    nn::Var<S> se = emb2_(g, nn::mish(g, emb1_(g, step_emb)));
    nn::Var<S> c = nn::concat_cols(g, {se, cond});
    nn::Var<S> d1 = down1_(g, x, c);
    nn::Var<S> p1 = downc1_(g, d1);
    nn::Var<S> d2 = down2_(g, p1, c);
    nn::Var<S> p2 = downc2_(g, d2);
    nn::Var<S> m = mid_(g, p2, c);
    nn::Var<S> u = upc1_(g, nn::upsample_nearest1d(g, m));
    u = up1_(g, nn::concat_channels1d(g, u, d2), c);
    u = upc2_(g, nn::upsample_nearest1d(g, u));
    u = up2_(g, nn::concat_channels1d(g, u, d1), c);
    nn::Var<S> f = nn::mish(g, final_gn_(g, final_conv_(g, u)));
    return head_(g, f);
  }

  int step_dim() const { return step_dim_; }

 private:
  nn::Linear<S> emb1_, emb2_;
  CondResBlock1d<S> down1_, down2_, mid_, up1_, up2_;
  nn::Conv1d<S> downc1_, downc2_, upc1_, upc2_, final_conv_;
  nn::GroupNorm<S> final_gn_;
  nn::Conv1d<S> head_;
  int step_dim_;
};

}  // namespace pry::diffusion
