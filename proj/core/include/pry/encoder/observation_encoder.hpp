#pragma once

#include "pry/encoder/image_encoder.hpp"

namespace pry::encoder {

// Learned joint embedding between image tokens and force tokens. The four
// force parameters are first embedded per scalar into d-dim tokens (the
// linear up-projection), then attend over the N image tokens:
//   K = I W^K,  V = I W^V,  Q = F_proj W^Q
// Projections are bias-free; the four attended queries are mean-pooled and
// passed through a two-layer MLP. No residual path: the output is the
// relational feature itself.
template <class S>
class CrossAttention {
 public:
  CrossAttention(nn::ParamStore<S>& ps, const ModelConfig& m, Rng& rng)
      : heads_(m.heads) {
    const int d = m.embed_dim;
    tok_w_ = &ps.add("ca.tok.w", {4, d});
    nn::init_normal(rng, tok_w_->value, 1.0, 1.0);
    tok_b_ = &ps.add("ca.tok.b", {4, d}, /*decay=*/false);
    wk_ = nn::Linear<S>(ps, "ca.wk", d, d, rng, /*bias=*/false, 1.0);
    wv_ = nn::Linear<S>(ps, "ca.wv", d, d, rng, /*bias=*/false, 1.0);
    wq_ = nn::Linear<S>(ps, "ca.wq", d, d, rng, /*bias=*/false, 1.0);
    mlp1_ = nn::Linear<S>(ps, "ca.m1", d, d, rng);
    mlp2_ = nn::Linear<S>(ps, "ca.m2", d, d, rng, /*bias=*/true, 1.0);
  }

  // tokens [B, N, d], force [B, 4] -> [B, d]
  nn::Var<S> operator()(nn::Graph<S>& g, nn::Var<S> tokens,
                        nn::Var<S> force) const {
    const int B = g.val(tokens).dim(0);
    const int N = g.val(tokens).dim(1);
    const int d = g.val(tokens).dim(2);
    auto project = [&](nn::Var<S> x, const nn::Linear<S>& lin, int n) {
      nn::Var<S> flat = nn::reshape(g, x, {B * n, d});
      return nn::reshape(g, lin(g, flat), {B, n, d});
    };
    nn::Var<S> q =
        project(nn::scalar_tokens(g, force, g.param(*tok_w_),
                                  g.param(*tok_b_)),
                wq_, 4);
    nn::Var<S> k = project(tokens, wk_, N);
    nn::Var<S> v = project(tokens, wv_, N);
    nn::Var<S> att = nn::attention(g, q, k, v, heads_);  // [B, 4, d]
    nn::Var<S> pooled = nn::mean_tokens(g, att);
    return mlp2_(g, nn::mish(g, mlp1_(g, pooled)));
  }

 private:
  int heads_;
  nn::Param<S>* tok_w_ = nullptr;
  nn::Param<S>* tok_b_ = nullptr;
  nn::Linear<S> wk_, wv_, wq_, mlp1_, mlp2_;
};

// Builds the FiLM conditioning vector for one variant. Frames are stacked
// batch-major ([B*n_obs, ...], frame index fastest), encoded by a shared
// CNN, fused with force per the variant, then flattened back to
// [B, n_obs * per_frame] and concatenated with the normalized poses.
template <class S>
class ObservationEncoder {
 public:
  ObservationEncoder(nn::ParamStore<S>& ps, const ExperimentConfig& cfg,
                     Variant variant, Rng& rng)
      : variant_(variant),
        n_obs_(cfg.model.n_obs),
        d_(cfg.model.embed_dim),
        image_(ps, cfg.model, rng) {
    if (variant_ == Variant::kPF)
      pf_proj_ = nn::Linear<S>(ps, "pf.proj", 4, d_, rng, true, 1.0);
    if (variant_ == Variant::kCA)
      ca_ = std::make_unique<CrossAttention<S>>(ps, cfg.model, rng);
  }

  int per_frame_dim() const {
    switch (variant_) {
      case Variant::kB: return image_.pooled_dim();
      case Variant::kLF: return image_.pooled_dim() + 4;
      case Variant::kPF: return image_.pooled_dim() + d_;
      case Variant::kCA: return d_;
    }
    fail("bad variant");
  }

  int cond_dim() const { return n_obs_ * (per_frame_dim() + 9); }

  // images [B*n, 3, s, s]; force [B*n, 4]; poses [B, n*9] -> [B, cond_dim]
  nn::Var<S> operator()(nn::Graph<S>& g, nn::Var<S> images, nn::Var<S> force,
                        nn::Var<S> poses) const {
    const int bn = g.val(images).dim(0);
    require(bn % n_obs_ == 0, "encoder: batch not a multiple of n_obs");
    const int B = bn / n_obs_;
    require(g.val(force).dim(0) == bn && g.val(poses).dim(0) == B,
            "encoder: force/pose batch mismatch");

    ImageFeatures<S> feats = image_(g, images);
    nn::Var<S> per_frame;  // [B*n, per_frame_dim]
    switch (variant_) {
      case Variant::kB:
        per_frame = feats.pooled;
        break;
      case Variant::kLF:
        per_frame = nn::concat_cols(g, {feats.pooled, force});
        break;
      case Variant::kPF:
        per_frame = nn::concat_cols(g, {feats.pooled, pf_proj_(g, force)});
        break;
      case Variant::kCA:
        per_frame = (*ca_)(g, feats.tokens, force);
        break;
    }
    nn::Var<S> flat =
        nn::reshape(g, per_frame, {B, n_obs_ * per_frame_dim()});
    return nn::concat_cols(g, {flat, poses});
  }

  Variant variant() const { return variant_; }
  int n_obs() const { return n_obs_; }

 private:
  Variant variant_;
  int n_obs_;
  int d_;
  ImageEncoder<S> image_;
  nn::Linear<S> pf_proj_;
  std::unique_ptr<CrossAttention<S>> ca_;
};

}  // namespace pry::encoder
