#pragma once

#include <string>

#include "pry/nn/ops.hpp"
#include "pry/rng.hpp"

namespace pry::nn {

// He-style fan-in init; `gain` 2.0 suits Mish/ReLU-family activations.
template <class S>
void init_normal(Rng& rng, Tensor<S>& t, double fan_in, double gain = 2.0) {
  const double std = std::sqrt(gain / std::max(1.0, fan_in));
  for (S& v : t.data) v = S(rng.normal() * std);
}

template <class S>
struct Linear {
  Param<S>* w = nullptr;
  Param<S>* b = nullptr;

  Linear() = default;
  Linear(ParamStore<S>& ps, const std::string& name, int in, int out,
         Rng& rng, bool bias = true, double gain = 2.0) {
    w = &ps.add(name + ".w", {out, in});
    init_normal(rng, w->value, in, gain);
    if (bias) b = &ps.add(name + ".b", {out}, /*decay=*/false);
  }

  Var<S> operator()(Graph<S>& g, Var<S> x) const {
    return linear(g, x, g.param(*w), b ? g.param(*b) : Var<S>{});
  }
};

template <class S>
struct Conv2d {
  Param<S>* w = nullptr;
  Param<S>* b = nullptr;
  int stride = 1;
  int pad = 0;

  Conv2d() = default;
  Conv2d(ParamStore<S>& ps, const std::string& name, int ci, int co, int k,
         int stride_, Rng& rng)
      : stride(stride_), pad(k / 2) {
    w = &ps.add(name + ".w", {co, ci, k, k});
    init_normal(rng, w->value, double(ci) * k * k);
    b = &ps.add(name + ".b", {co}, /*decay=*/false);
  }

  Var<S> operator()(Graph<S>& g, Var<S> x) const {
    return conv2d(g, x, g.param(*w), g.param(*b), stride, pad);
  }
};

template <class S>
struct Conv1d {
  Param<S>* w = nullptr;
  Param<S>* b = nullptr;
  int stride = 1;
  int pad = 0;

  Conv1d() = default;
  Conv1d(ParamStore<S>& ps, const std::string& name, int ci, int co, int k,
         int stride_, Rng& rng)
      : stride(stride_), pad(k / 2) {
    w = &ps.add(name + ".w", {co, ci, k});
    init_normal(rng, w->value, double(ci) * k);
    b = &ps.add(name + ".b", {co}, /*decay=*/false);
  }

  Var<S> operator()(Graph<S>& g, Var<S> x) const {
    return conv1d(g, x, g.param(*w), g.param(*b), stride, pad);
  }

  void zero_init() {
    w->value.fill(S(0));
    b->value.fill(S(0));
  }
};

template <class S>
struct GroupNorm {
  Param<S>* gamma = nullptr;
  Param<S>* beta = nullptr;
  int groups = 1;

  GroupNorm() = default;
  GroupNorm(ParamStore<S>& ps, const std::string& name, int channels,
            int groups_)
      : groups(groups_) {
    gamma = &ps.add(name + ".g", {channels}, /*decay=*/false);
    gamma->value.fill(S(1));
    beta = &ps.add(name + ".b", {channels}, /*decay=*/false);
  }

  Var<S> operator()(Graph<S>& g, Var<S> x) const {
    return group_norm(g, x, g.param(*gamma), g.param(*beta), groups);
  }
};

// conv-GN-Mish x2 with an identity or 1x1-projected skip.
template <class S>
struct ResBlock2d {
  Conv2d<S> conv1, conv2, skip;
  GroupNorm<S> gn1, gn2;
  bool projected = false;

  ResBlock2d() = default;
  ResBlock2d(ParamStore<S>& ps, const std::string& name, int ci, int co,
             int stride, int gn_groups, Rng& rng)
      : conv1(ps, name + ".c1", ci, co, 3, stride, rng),
        conv2(ps, name + ".c2", co, co, 3, 1, rng),
        gn1(ps, name + ".n1", co, gn_groups),
        gn2(ps, name + ".n2", co, gn_groups),
        projected(stride != 1 || ci != co) {
    if (projected) skip = Conv2d<S>(ps, name + ".sk", ci, co, 1, stride, rng);
  }

  Var<S> operator()(Graph<S>& g, Var<S> x) const {
    Var<S> h = mish(g, gn1(g, conv1(g, x)));
    h = gn2(g, conv2(g, h));
    Var<S> s = projected ? skip(g, x) : x;
    return mish(g, add(g, h, s));
  }
};

}  // namespace pry::nn
