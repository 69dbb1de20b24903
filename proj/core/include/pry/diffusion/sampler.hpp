#pragma once

#include <vector>

#include "pry/diffusion/policy.hpp"
#include "pry/diffusion/schedule.hpp"
#include "pry/rng.hpp"

namespace pry::diffusion {

// Runs the full reverse chain A^K -> A^0 in normalized action space.
// Observations are encoded once; every denoising step reuses the same
// inference graph, so parameters are bound (and copied) only once per call.
//
// images [B*n_obs, 3, s, s], force [B*n_obs, 4], poses [B, n_obs*9].
// Returns the denoised action chunk [B, 9, horizon].
template <class S>
nn::Tensor<S> sample_actions(PolicyModel<S>& model, const Schedule& sched,
                             const nn::Tensor<S>& images,
                             const nn::Tensor<S>& force,
                             const nn::Tensor<S>& poses, int horizon,
                             Rng& rng) {
  const int batch = poses.shape.at(0);
  nn::Graph<S> g(false);
  const nn::Var<S> cond =
      model.enc(g, g.input(images), g.input(force), g.input(poses));

  nn::Tensor<S> actions({batch, kActionDim, horizon});
  for (S& x : actions.data) x = S(rng.normal());

  for (int k = sched.num_steps(); k >= 1; --k) {
    const nn::Var<S> se = g.input(step_embedding<S>(
        std::vector<int>(size_t(batch), k), model.model.step_embed_dim));
    const nn::Var<S> eps = model.unet(g, g.input(actions), se, cond);
    const nn::Tensor<S>& ev = g.val(eps);

    const double scale = sched.coef_scale(k);
    const double eps_w = sched.coef_eps(k);
    const double sig = sched.sigma(k);
    for (size_t i = 0; i < actions.data.size(); ++i) {
      const double z = k > 1 ? rng.normal() : 0.0;
      actions.data[i] =
          S(scale * (double(actions.data[i]) - eps_w * double(ev.data[i])) +
            sig * z);
    }
  }
  return actions;
}

}  // namespace pry::diffusion
