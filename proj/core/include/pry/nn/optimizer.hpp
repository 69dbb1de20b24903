#pragma once

#include <cmath>
#include <vector>

#include "pry/nn/graph.hpp"

namespace pry::nn {

// AdamW with decoupled weight decay (decay skips params flagged decay=false,
// i.e. biases and norm affines). Moments are kept in double regardless of
// the parameter scalar type so long runs and checkpoints stay exact.
template <class S>
class AdamW {
 public:
  AdamW(std::vector<Param<S>*> params, double lr, double weight_decay,
        double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)),
        lr_(lr),
        wd_(weight_decay),
        beta1_(beta1),
        beta2_(beta2),
        eps_(eps) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (Param<S>* p : params_) {
      m_.emplace_back(p->value.numel());
      v_.emplace_back(p->value.numel());
      m_.back().setZero();
      v_.back().setZero();
    }
  }

  // lr_scale multiplies the base lr (warmup / cosine schedules live in the
  // caller).
  void step(double lr_scale = 1.0) {
    ++t_;
    const double lr = lr_ * lr_scale;
    const double bc1 = 1.0 - std::pow(beta1_, double(t_));
    const double bc2 = 1.0 - std::pow(beta2_, double(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
      Param<S>* p = params_[i];
      const i64 n = p->value.numel();
      for (i64 j = 0; j < n; ++j) {
        const double g = double(p->grad.data[size_t(j)]);
        double& m = m_[i](j);
        double& v = v_[i](j);
        m = beta1_ * m + (1.0 - beta1_) * g;
        v = beta2_ * v + (1.0 - beta2_) * g * g;
        double upd = (m / bc1) / (std::sqrt(v / bc2) + eps_);
        if (p->decay) upd += wd_ * double(p->value.data[size_t(j)]);
        p->value.data[size_t(j)] -= S(lr * upd);
      }
    }
  }

  i64 steps() const { return t_; }
  void set_steps(i64 t) { t_ = t; }
  Eigen::VectorXd& m(size_t i) { return m_[i]; }
  Eigen::VectorXd& v(size_t i) { return v_[i]; }
  size_t size() const { return params_.size(); }

 private:
  std::vector<Param<S>*> params_;
  std::vector<Eigen::VectorXd> m_;
  std::vector<Eigen::VectorXd> v_;
  double lr_, wd_, beta1_, beta2_, eps_;
  i64 t_ = 0;
};

// Exponential moving average of parameters with the usual (1+t)/(10+t)
// warmup ramp capped at `decay`. decay == 1 is the degenerate documented
// edge: the shadow never moves.
template <class S>
class Ema {
 public:
  Ema(std::vector<Param<S>*> params, double decay)
      : params_(std::move(params)), decay_(decay) {
    shadow_.reserve(params_.size());
    for (Param<S>* p : params_) shadow_.push_back(p->value);
  }

  double current_decay() const {
    if (decay_ == 1.0) return 1.0;
    return std::min(decay_, (1.0 + double(t_)) / (10.0 + double(t_)));
  }

  void update() {
    const double d = current_decay();
    ++t_;
    if (d == 1.0) return;
    for (size_t i = 0; i < params_.size(); ++i)
      shadow_[i].vec() =
          S(d) * shadow_[i].vec() + S(1.0 - d) * params_[i]->value.vec();
  }

  // Swaps shadow weights into the live params (e.g. for evaluation).
  void copy_to_params() const {
    for (size_t i = 0; i < params_.size(); ++i)
      params_[i]->value = shadow_[i];
  }

  const Tensor<S>& shadow(size_t i) const { return shadow_[i]; }
  Tensor<S>& shadow(size_t i) { return shadow_[i]; }
  size_t size() const { return shadow_.size(); }
  i64 steps() const { return t_; }
  void set_steps(i64 t) { t_ = t; }

 private:
  std::vector<Param<S>*> params_;
  std::vector<Tensor<S>> shadow_;
  double decay_;
  i64 t_ = 0;
};

}  // namespace pry::nn
