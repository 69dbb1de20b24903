#include <doctest.h>

#include <cmath>
#include <numbers>

#include "pry/diffusion/schedule.hpp"

using namespace pry;
using pry::diffusion::Schedule;

namespace {

// Independent recomputation of the squared-cosine curve.
double cosine_f(double u, int K, double s) {
  double a = (u / K + s) / (1.0 + s) * std::numbers::pi / 2.0;
  double c = std::cos(a);
  return c * c;
}

}  // namespace

TEST_CASE("schedule matches the squared-cosine definition") {
  DiffusionConfig cfg;  // K = 100, s = 0.008, clip 0.999
  Schedule sch(cfg);
  CHECK(sch.num_steps() == 100);
  CHECK(sch.alpha_bar(0) == 1.0);

  // Where beta is below the clip, alpha_bar must equal f(k)/f(0) exactly;
  // where the clip bites, beta == clip and alpha_bar stays consistent with
  // the clipped chain.
  double abar_prev = 1.0;
  int clipped = 0;
  for (int k = 1; k <= 100; ++k) {
    double raw_abar = cosine_f(k, 100, cfg.cosine_s) /
                      cosine_f(0, 100, cfg.cosine_s);
    double raw_beta = 1.0 - raw_abar / abar_prev;
    if (raw_beta < cfg.beta_clip) {
      CHECK(sch.beta(k) == doctest::Approx(raw_beta).epsilon(1e-12));
    } else {
      CHECK(sch.beta(k) == cfg.beta_clip);
      ++clipped;
    }
    CHECK(sch.alpha_bar(k) ==
          doctest::Approx(sch.alpha_bar(k - 1) * (1.0 - sch.beta(k)))
              .epsilon(1e-12));
    abar_prev = sch.alpha_bar(k);
  }
  CHECK(clipped >= 1);  // the cosine tail hits the clip at k = K
}

TEST_CASE("alpha_bar decreases monotonically from 1 to near 0") {
  Schedule sch(DiffusionConfig{});
  for (int k = 1; k <= sch.num_steps(); ++k) {
    CHECK(sch.alpha_bar(k) < sch.alpha_bar(k - 1));
    CHECK(sch.alpha_bar(k) > 0.0);
    CHECK(sch.beta(k) > 0.0);
    CHECK(sch.beta(k) <= 0.999);
  }
  CHECK(sch.alpha_bar(sch.num_steps()) < 1e-4);
}

TEST_CASE("forward coefficients are variance preserving") {
  Schedule sch(DiffusionConfig{});
  for (int k = 1; k <= sch.num_steps(); ++k) {
    double c2 = sch.c_signal(k) * sch.c_signal(k) +
                sch.c_noise(k) * sch.c_noise(k);
    CHECK(c2 == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("reverse-step coefficients satisfy the DDPM identities") {
  Schedule sch(DiffusionConfig{});
  for (int k = 1; k <= sch.num_steps(); ++k) {
    double beta = sch.beta(k);
    double alpha = 1.0 - beta;
    CHECK(sch.alpha(k) == doctest::Approx(alpha).epsilon(1e-12));
    CHECK(sch.coef_scale(k) ==
          doctest::Approx(1.0 / std::sqrt(alpha)).epsilon(1e-12));
    CHECK(sch.coef_eps(k) ==
          doctest::Approx(beta / std::sqrt(1.0 - sch.alpha_bar(k)))
              .epsilon(1e-12));
    if (k == 1) {
      CHECK(sch.sigma(1) == 0.0);  // final step is deterministic
    } else {
      double post = beta * (1.0 - sch.alpha_bar(k - 1)) /
                    (1.0 - sch.alpha_bar(k));
      CHECK(sch.sigma(k) == doctest::Approx(std::sqrt(post)).epsilon(1e-12));
      CHECK(sch.sigma(k) > 0.0);
      CHECK(sch.sigma(k) < 1.0);
    }
  }
}

TEST_CASE("schedule validates its inputs") {
  DiffusionConfig bad;
  bad.num_steps = 0;
  CHECK_THROWS_AS(Schedule{bad}, Error);
  Schedule sch(DiffusionConfig{});
  CHECK_THROWS_AS(sch.beta(0), Error);
  CHECK_THROWS_AS(sch.beta(101), Error);
  CHECK_THROWS_AS(sch.alpha_bar(-1), Error);
}
