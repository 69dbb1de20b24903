#include "pry/diffusion/schedule.hpp"

#include <numbers>

namespace pry::diffusion {

Schedule::Schedule(const DiffusionConfig& cfg) : K_(cfg.num_steps) {
  require(K_ >= 1, "schedule: num_steps must be >= 1");
  const double s = cfg.cosine_s;
  auto f = [&](double u) {
    const double x = (u / K_ + s) / (1.0 + s) * std::numbers::pi / 2.0;
    const double c = std::cos(x);
    return c * c;
  };
  const double f0 = f(0.0);
  alpha_bar_.resize(size_t(K_) + 1);
  beta_.resize(size_t(K_) + 1, 0.0);
  alpha_bar_[0] = 1.0;
  for (int k = 1; k <= K_; ++k) {
    alpha_bar_[size_t(k)] = f(double(k)) / f0;
    const double ratio = alpha_bar_[size_t(k)] / alpha_bar_[size_t(k) - 1];
    beta_[size_t(k)] = std::min(1.0 - ratio, cfg.beta_clip);
    // Keep alpha_bar consistent with the clipped betas.
    alpha_bar_[size_t(k)] = alpha_bar_[size_t(k) - 1] * (1.0 - beta_[size_t(k)]);
  }
}

double Schedule::alpha_bar(int k) const {
  require(k >= 0 && k <= K_, "schedule: alpha_bar index out of range");
  return alpha_bar_[size_t(k)];
}

double Schedule::beta(int k) const {
  require(k >= 1 && k <= K_, "schedule: beta index out of range");
  return beta_[size_t(k)];
}

double Schedule::coef_scale(int k) const {
  return 1.0 / std::sqrt(alpha(k));
}

double Schedule::coef_eps(int k) const {
  return beta(k) / std::sqrt(1.0 - alpha_bar(k));
}

double Schedule::sigma(int k) const {
  require(k >= 1 && k <= K_, "schedule: sigma index out of range");
  if (k == 1) return 0.0;
  const double var =
      beta(k) * (1.0 - alpha_bar(k - 1)) / (1.0 - alpha_bar(k));
  return std::sqrt(var);
}

}  // namespace pry::diffusion
