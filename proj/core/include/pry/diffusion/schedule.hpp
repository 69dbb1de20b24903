#pragma once

#include <cmath>
#include <vector>

#include "pry/config.hpp"

namespace pry::diffusion {

// Squared-cosine noise schedule. With K steps indexed k = 1..K and offset s:
//
//   f(u) = cos^2( (u/K + s) / (1 + s) * pi/2 ),   alpha_bar(k) = f(k) / f(0)
//   beta_k = min(1 - alpha_bar(k) / alpha_bar(k-1), beta_clip)
//
// The reverse update, in the noise-prediction parameterization, is
//
//   A^{k-1} = 1/sqrt(alpha_k) * (A^k - beta_k / sqrt(1 - alpha_bar(k)) * eps)
//             + sigma_k * z
//
// with sigma_k^2 = beta_k * (1 - alpha_bar(k-1)) / (1 - alpha_bar(k)) and
// sigma_1 = 0 so the final step is deterministic.
class Schedule {
 public:
  explicit Schedule(const DiffusionConfig& cfg);

  int num_steps() const { return K_; }

  // k in [0, K] for alpha_bar (alpha_bar(0) == 1), [1, K] elsewhere.
  double alpha_bar(int k) const;
  double beta(int k) const;
  double alpha(int k) const { return 1.0 - beta(k); }

  // Reverse-step coefficients.
  double coef_scale(int k) const;  // 1 / sqrt(alpha_k)
  double coef_eps(int k) const;    // beta_k / sqrt(1 - alpha_bar(k))
  double sigma(int k) const;

  // Forward noising x_k = c_signal(k) x_0 + c_noise(k) eps.
  double c_signal(int k) const { return std::sqrt(alpha_bar(k)); }
  double c_noise(int k) const { return std::sqrt(1.0 - alpha_bar(k)); }

 private:
  int K_ = 0;
  std::vector<double> alpha_bar_;  // size K+1
  std::vector<double> beta_;       // size K+1, index 0 unused
};

}  // namespace pry::diffusion
