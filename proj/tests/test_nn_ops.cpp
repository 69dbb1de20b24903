#include <doctest.h>

#include <cmath>
#include <vector>

#include "pry/nn/ops.hpp"
#include "support/gradcheck.hpp"

using namespace pry;
using namespace pry::nn;
using pry::testing::add_normal;
using pry::testing::fd_check;
using pry::testing::fill_normal;

namespace {

// Builds loss = mse(op(params...), fixed random target) and runs a full
// central-difference sweep over every parameter scalar.
// Tolerance: with h = 1e-4 the check carries ~1e-8 roundoff plus h^2 f'''/6
// truncation (f''' up to ~1e2 for these composites). Real backward bugs show
// up at 1e-3 or worse, so 1e-6 keeps full detection power.
template <class BuildOp>
void check_op_gradient(Rng& rng, ParamStore<double>& ps, BuildOp&& build,
                       double tol = 1e-6) {
  Tensor<double> target;
  auto eval = [&](bool train) {
    Graph<double> g(train);
    Var<double> y = build(g);
    if (target.data.empty()) {
      target = Tensor<double>(g.val(y).shape);
      fill_normal(rng, target);
    }
    Var<double> loss = mse(g, y, g.input(target));
    if (train) g.backward(loss);
    return g.val(loss).data[0];
  };
  auto rep = fd_check(ps, eval);
  CHECK(rep.checked > 0);
  CHECK(rep.max_rel_err < tol);
}

// Direct convolution with replicate (2d) padding, the oracle for conv2d.
Tensor<double> conv2d_oracle(const Tensor<double>& x, const Tensor<double>& w,
                             const Tensor<double>& b, int stride, int pad) {
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int Ho = (H + 2 * pad - kh) / stride + 1;
  const int Wo = (W + 2 * pad - kw) / stride + 1;
  Tensor<double> y({B, Co, Ho, Wo});
  for (int bb = 0; bb < B; ++bb)
    for (int co = 0; co < Co; ++co)
      for (int i = 0; i < Ho; ++i)
        for (int j = 0; j < Wo; ++j) {
          double acc = b.data[size_t(co)];
          for (int c = 0; c < C; ++c)
            for (int u = 0; u < kh; ++u)
              for (int v = 0; v < kw; ++v) {
                int ii = std::clamp(i * stride + u - pad, 0, H - 1);
                int jj = std::clamp(j * stride + v - pad, 0, W - 1);
                acc += x.data[size_t(((bb * C + c) * H + ii) * W + jj)] *
                       w.data[size_t(((co * C + c) * kh + u) * kw + v)];
              }
          y.data[size_t(((bb * Co + co) * Ho + i) * Wo + j)] = acc;
        }
  return y;
}

// Direct 1d convolution with zero padding.
Tensor<double> conv1d_oracle(const Tensor<double>& x, const Tensor<double>& w,
                             const Tensor<double>& b, int stride, int pad) {
  const int B = x.dim(0), C = x.dim(1), L = x.dim(2);
  const int Co = w.dim(0), k = w.dim(2);
  const int Lo = (L + 2 * pad - k) / stride + 1;
  Tensor<double> y({B, Co, Lo});
  for (int bb = 0; bb < B; ++bb)
    for (int co = 0; co < Co; ++co)
      for (int i = 0; i < Lo; ++i) {
        double acc = b.data[size_t(co)];
        for (int c = 0; c < C; ++c)
          for (int u = 0; u < k; ++u) {
            int ii = i * stride + u - pad;
            if (ii < 0 || ii >= L) continue;
            acc += x.data[size_t((bb * C + c) * L + ii)] *
                   w.data[size_t((co * C + c) * k + u)];
          }
        y.data[size_t((bb * Co + co) * Lo + i)] = acc;
      }
  return y;
}

double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  REQUIRE(same_shape(a, b));
  double m = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

}  // namespace

TEST_CASE("add / scale / mul values and gradients") {
  Rng rng(11);
  ParamStore<double> ps;
  auto& a = add_normal(ps, rng, "a", {3, 4});
  auto& b = add_normal(ps, rng, "b", {3, 4});
  {
    Graph<double> g(false);
    Var<double> y = add(g, g.param(a), g.param(b));
    Var<double> z = mul(g, g.param(a), g.param(b));
    Var<double> w = scale(g, g.param(a), -2.5);
    for (i64 i = 0; i < 12; ++i) {
      CHECK(g.val(y).data[size_t(i)] ==
            doctest::Approx(a.value.data[size_t(i)] + b.value.data[size_t(i)])
                .epsilon(1e-12));
      CHECK(g.val(z).data[size_t(i)] ==
            doctest::Approx(a.value.data[size_t(i)] * b.value.data[size_t(i)])
                .epsilon(1e-12));
      CHECK(g.val(w).data[size_t(i)] ==
            doctest::Approx(-2.5 * a.value.data[size_t(i)]).epsilon(1e-12));
    }
  }
  check_op_gradient(rng, ps, [&](Graph<double>& g) {
    return mul(g, add(g, g.param(a), g.param(b)),
               scale(g, g.param(b), 0.7));
  });
}

TEST_CASE("mish matches closed form on both branches") {
  auto ref = [](double x) {
    return x * std::tanh(std::log1p(std::exp(std::min(x, 30.0))));
  };
  Rng rng(3);
  ParamStore<double> ps;
  auto& x = ps.add("x", {7});
  x.value.data = {-8.0, -1.0, -0.1, 0.0, 0.5, 3.0, 25.0};
  Graph<double> g(false);
  Var<double> y = mish(g, g.param(x));
  for (size_t i = 0; i < 7; ++i)
    CHECK(g.val(y).data[i] ==
          doctest::Approx(ref(x.value.data[i])).epsilon(1e-10));

  ParamStore<double> ps2;
  add_normal(ps2, rng, "x", {4, 5}, 2.0);
  check_op_gradient(rng, ps2, [&](Graph<double>& gg) {
    return mish(gg, gg.param(*ps2.find("x")));
  });
}

TEST_CASE("reshape and concat layouts") {
  Rng rng(5);
  ParamStore<double> ps;
  auto& a = add_normal(ps, rng, "a", {2, 3});
  auto& b = add_normal(ps, rng, "b", {2, 2});
  auto& c = add_normal(ps, rng, "c", {2, 4, 3});
  auto& d = add_normal(ps, rng, "d", {2, 2, 3});
  {
    Graph<double> g(false);
    Var<double> r = reshape(g, g.param(c), {4, 6});
    CHECK(g.val(r).shape == std::vector<int>{4, 6});
    CHECK(g.val(r).data == c.value.data);

    Var<double> cc = concat_cols(g, {g.param(a), g.param(b)});
    CHECK(g.val(cc).shape == std::vector<int>{2, 5});
    for (int r2 = 0; r2 < 2; ++r2) {
      for (int j = 0; j < 3; ++j)
        CHECK(g.val(cc).data[size_t(r2 * 5 + j)] ==
              a.value.data[size_t(r2 * 3 + j)]);
      for (int j = 0; j < 2; ++j)
        CHECK(g.val(cc).data[size_t(r2 * 5 + 3 + j)] ==
              b.value.data[size_t(r2 * 2 + j)]);
    }

    Var<double> ch = concat_channels1d(g, g.param(c), g.param(d));
    CHECK(g.val(ch).shape == std::vector<int>{2, 6, 3});
    for (int bb = 0; bb < 2; ++bb) {
      for (int ci = 0; ci < 4; ++ci)
        for (int l = 0; l < 3; ++l)
          CHECK(g.val(ch).data[size_t((bb * 6 + ci) * 3 + l)] ==
                c.value.data[size_t((bb * 4 + ci) * 3 + l)]);
      for (int ci = 0; ci < 2; ++ci)
        for (int l = 0; l < 3; ++l)
          CHECK(g.val(ch).data[size_t((bb * 6 + 4 + ci) * 3 + l)] ==
                d.value.data[size_t((bb * 2 + ci) * 3 + l)]);
    }
  }
  check_op_gradient(rng, ps, [&](Graph<double>& g) {
    Var<double> cc = concat_cols(g, {g.param(a), g.param(b)});
    Var<double> ch = concat_channels1d(g, g.param(c), g.param(d));
    return concat_cols(g, {cc, reshape(g, ch, {2, 18})});
  });
}

TEST_CASE("matmul and linear match direct computation") {
  Rng rng(7);
  ParamStore<double> ps;
  auto& a = add_normal(ps, rng, "a", {3, 4});
  auto& b = add_normal(ps, rng, "b", {4, 5});
  auto& w = add_normal(ps, rng, "w", {6, 4});
  auto& bias = add_normal(ps, rng, "bias", {6});
  {
    Graph<double> g(false);
    Var<double> y = matmul(g, g.param(a), g.param(b));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 5; ++j) {
        double acc = 0;
        for (int k = 0; k < 4; ++k)
          acc += a.value.data[size_t(i * 4 + k)] *
                 b.value.data[size_t(k * 5 + j)];
        CHECK(g.val(y).data[size_t(i * 5 + j)] ==
              doctest::Approx(acc).epsilon(1e-12));
      }
    Var<double> z = linear(g, g.param(a), g.param(w), g.param(bias));
    for (int i = 0; i < 3; ++i)
      for (int o = 0; o < 6; ++o) {
        double acc = bias.value.data[size_t(o)];
        for (int k = 0; k < 4; ++k)
          acc += a.value.data[size_t(i * 4 + k)] *
                 w.value.data[size_t(o * 4 + k)];
        CHECK(g.val(z).data[size_t(i * 6 + o)] ==
              doctest::Approx(acc).epsilon(1e-12));
      }
  }
  check_op_gradient(rng, ps, [&](Graph<double>& g) {
    Var<double> y = matmul(g, g.param(a), g.param(b));
    Var<double> z = linear(g, g.param(a), g.param(w), g.param(bias));
    Var<double> z2 = linear(g, g.param(a), g.param(w));  // no bias
    return concat_cols(g, {y, z, z2});
  });
}

TEST_CASE("conv2d matches the direct oracle") {
  Rng rng(13);
  for (int stride : {1, 2}) {
    ParamStore<double> ps;
    auto& x = add_normal(ps, rng, "x", {2, 3, 5, 4});
    auto& w = add_normal(ps, rng, "w", {4, 3, 3, 3}, 0.5);
    auto& b = add_normal(ps, rng, "b", {4});
    {
      Graph<double> g(false);
      Var<double> y = conv2d(g, g.param(x), g.param(w), g.param(b), stride, 1);
      Tensor<double> ref = conv2d_oracle(x.value, w.value, b.value, stride, 1);
      CHECK(max_abs_diff(g.val(y), ref) < 1e-12);
    }
    check_op_gradient(rng, ps, [&](Graph<double>& g) {
      return conv2d(g, g.param(x), g.param(w), g.param(b), stride, 1);
    });
  }
  // 5x5 kernel, pad 2: the stem configuration.
  ParamStore<double> ps;
  auto& x = add_normal(ps, rng, "x", {1, 2, 6, 6});
  auto& w = add_normal(ps, rng, "w", {3, 2, 5, 5}, 0.3);
  auto& b = add_normal(ps, rng, "b", {3});
  Graph<double> g(false);
  Var<double> y = conv2d(g, g.param(x), g.param(w), g.param(b), 2, 2);
  CHECK(max_abs_diff(g.val(y), conv2d_oracle(x.value, w.value, b.value, 2, 2)) <
        1e-12);
}

TEST_CASE("conv1d matches the direct oracle") {
  Rng rng(17);
  for (int stride : {1, 2}) {
    ParamStore<double> ps;
    auto& x = add_normal(ps, rng, "x", {2, 3, 8});
    auto& w = add_normal(ps, rng, "w", {4, 3, 5}, 0.5);
    auto& b = add_normal(ps, rng, "b", {4});
    {
      Graph<double> g(false);
      Var<double> y = conv1d(g, g.param(x), g.param(w), g.param(b), stride, 2);
      Tensor<double> ref = conv1d_oracle(x.value, w.value, b.value, stride, 2);
      CHECK(max_abs_diff(g.val(y), ref) < 1e-12);
    }
    check_op_gradient(rng, ps, [&](Graph<double>& g) {
      return conv1d(g, g.param(x), g.param(w), g.param(b), stride, 2);
    });
  }
}

TEST_CASE("group_norm matches direct normalization") {
  Rng rng(19);
  ParamStore<double> ps;
  auto& x = add_normal(ps, rng, "x", {2, 6, 3}, 2.0);
  auto& gamma = add_normal(ps, rng, "gamma", {6});
  auto& beta = add_normal(ps, rng, "beta", {6});
  const int groups = 3, cg = 2, L = 3;
  {
    Graph<double> g(false);
    Var<double> y = group_norm(g, g.param(x), g.param(gamma), g.param(beta),
                               groups);
    for (int b = 0; b < 2; ++b)
      for (int grp = 0; grp < groups; ++grp) {
        double mean = 0, var = 0;
        for (int c = grp * cg; c < (grp + 1) * cg; ++c)
          for (int l = 0; l < L; ++l)
            mean += x.value.data[size_t((b * 6 + c) * L + l)];
        mean /= cg * L;
        for (int c = grp * cg; c < (grp + 1) * cg; ++c)
          for (int l = 0; l < L; ++l) {
            double d = x.value.data[size_t((b * 6 + c) * L + l)] - mean;
            var += d * d;
          }
        var /= cg * L;
        for (int c = grp * cg; c < (grp + 1) * cg; ++c)
          for (int l = 0; l < L; ++l) {
            double xh = (x.value.data[size_t((b * 6 + c) * L + l)] - mean) /
                        std::sqrt(var + 1e-5);
            double ref = gamma.value.data[size_t(c)] * xh +
                         beta.value.data[size_t(c)];
            CHECK(g.val(y).data[size_t((b * 6 + c) * L + l)] ==
                  doctest::Approx(ref).epsilon(1e-10));
          }
      }
  }
  check_op_gradient(rng, ps, [&](Graph<double>& g) {
    return group_norm(g, g.param(x), g.param(gamma), g.param(beta), groups);
  }, 1e-6);

  // 4d input takes the same code path over H*W.
  ParamStore<double> ps2;
  auto& x2 = add_normal(ps2, rng, "x", {2, 4, 3, 3});
  auto& g2 = add_normal(ps2, rng, "g", {4});
  auto& b2 = add_normal(ps2, rng, "b", {4});
  check_op_gradient(rng, ps2, [&](Graph<double>& g) {
    return group_norm(g, g.param(x2), g.param(g2), g.param(b2), 2);
  }, 1e-6);
}

TEST_CASE("softmax_rows is a row-stochastic map") {
  Rng rng(23);
  ParamStore<double> ps;
  auto& x = add_normal(ps, rng, "x", {4, 6}, 3.0);
  {
    Graph<double> g(false);
    Var<double> y = softmax_rows(g, g.param(x));
    for (int r = 0; r < 4; ++r) {
      double sum = 0;
      for (int c = 0; c < 6; ++c) {
        double v = g.val(y).data[size_t(r * 6 + c)];
        CHECK(v > 0.0);
        sum += v;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    // Shift invariance: softmax(x + c) == softmax(x).
    Tensor<double> shifted = x.value;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 6; ++c) shifted.data[size_t(r * 6 + c)] += 100.0;
    Graph<double> g2(false);
    Var<double> y2 = softmax_rows(g2, g2.input(shifted));
    CHECK(max_abs_diff(g.val(y), g2.val(y2)) < 1e-12);
  }
  check_op_gradient(rng, ps, [&](Graph<double>& g) {
    return softmax_rows(g, g.param(x));
  }, 1e-6);
}

TEST_CASE("pooling ops match direct means") {
  Rng rng(29);
  ParamStore<double> ps;
  auto& x = add_normal(ps, rng, "x", {2, 3, 4, 5});
  auto& t = add_normal(ps, rng, "t", {2, 4, 3});
  {
    Graph<double> g(false);
    Var<double> y = global_avg_pool2d(g, g.param(x));
    CHECK(g.val(y).shape == std::vector<int>{2, 3});
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 3; ++c) {
        double mean = 0;
        for (int i = 0; i < 20; ++i)
          mean += x.value.data[size_t((b * 3 + c) * 20 + i)];
        CHECK(g.val(y).data[size_t(b * 3 + c)] ==
              doctest::Approx(mean / 20).epsilon(1e-12));
      }
    Var<double> m = mean_tokens(g, g.param(t));
    CHECK(g.val(m).shape == std::vector<int>{2, 3});
    for (int b = 0; b < 2; ++b)
      for (int d = 0; d < 3; ++d) {
        double mean = 0;
        for (int n = 0; n < 4; ++n)
          mean += t.value.data[size_t((b * 4 + n) * 3 + d)];
        CHECK(g.val(m).data[size_t(b * 3 + d)] ==
              doctest::Approx(mean / 4).epsilon(1e-12));
      }
  }
  check_op_gradient(rng, ps, [&](Graph<double>& g) {
    return concat_cols(
        g, {global_avg_pool2d(g, g.param(x)), mean_tokens(g, g.param(t))});
  });
}

TEST_CASE("spatial_softmax returns expected keypoints") {
  Rng rng(31);
  // A single hot pixel: expectation must sit on that pixel's grid coords.
  ParamStore<double> ps0;
  auto& hot = ps0.add("hot", {1, 1, 3, 5});
  hot.value.fill(0.0);
  hot.value.data[size_t(1 * 5 + 4)] = 60.0;  // row 1, col 4
  {
    Graph<double> g(false);
    Var<double> y = spatial_softmax(g, g.param(hot));
    CHECK(g.val(y).shape == std::vector<int>{1, 2});
    CHECK(g.val(y).data[0] == doctest::Approx(1.0).epsilon(1e-9));   // x = col 4 of 5
    CHECK(g.val(y).data[1] == doctest::Approx(0.0).epsilon(1e-9));   // y = row 1 of 3
  }
  ParamStore<double> ps;
  auto& x = add_normal(ps, rng, "x", {2, 3, 4, 4}, 1.5);
  check_op_gradient(rng, ps, [&](Graph<double>& g) {
    return spatial_softmax(g, g.param(x));
  }, 1e-6);
}

TEST_CASE("attention matches a per-head oracle") {
  Rng rng(37);
  const int B = 2, nq = 3, nk = 4, d = 6, heads = 2, dh = d / heads;
  ParamStore<double> ps;
  auto& q = add_normal(ps, rng, "q", {B, nq, d});
  auto& k = add_normal(ps, rng, "k", {B, nk, d});
  auto& v = add_normal(ps, rng, "v", {B, nk, d});
  {
    Graph<double> g(false);
    Var<double> y = attention(g, g.param(q), g.param(k), g.param(v), heads);
    CHECK(g.val(y).shape == std::vector<int>{B, nq, d});
    const double sc = 1.0 / std::sqrt(double(dh));
    for (int b = 0; b < B; ++b)
      for (int h = 0; h < heads; ++h)
        for (int i = 0; i < nq; ++i) {
          std::vector<double> logits(size_t(nk), 0.0);
          for (int j = 0; j < nk; ++j) {
            double dot = 0;
            for (int c = 0; c < dh; ++c)
              dot += q.value.data[size_t((b * nq + i) * d + h * dh + c)] *
                     k.value.data[size_t((b * nk + j) * d + h * dh + c)];
            logits[size_t(j)] = sc * dot;
          }
          double mx = *std::max_element(logits.begin(), logits.end());
          double z = 0;
          for (double& l : logits) {
            l = std::exp(l - mx);
            z += l;
          }
          for (int c = 0; c < dh; ++c) {
            double out = 0;
            for (int j = 0; j < nk; ++j)
              out += logits[size_t(j)] / z *
                     v.value.data[size_t((b * nk + j) * d + h * dh + c)];
            CHECK(g.val(y).data[size_t((b * nq + i) * d + h * dh + c)] ==
                  doctest::Approx(out).epsilon(1e-10));
          }
        }
  }
  check_op_gradient(rng, ps, [&](Graph<double>& g) {
    return attention(g, g.param(q), g.param(k), g.param(v), heads);
  }, 1e-6);
}

TEST_CASE("scalar_tokens embeds each scalar with its own row") {
  Rng rng(41);
  const int B = 2, n = 4, d = 5;
  ParamStore<double> ps;
  auto& x = add_normal(ps, rng, "x", {B, n});
  auto& w = add_normal(ps, rng, "w", {n, d});
  auto& b = add_normal(ps, rng, "b", {n, d});
  {
    Graph<double> g(false);
    Var<double> y = scalar_tokens(g, g.param(x), g.param(w), g.param(b));
    CHECK(g.val(y).shape == std::vector<int>{B, n, d});
    for (int bb = 0; bb < B; ++bb)
      for (int i = 0; i < n; ++i)
        for (int c = 0; c < d; ++c)
          CHECK(g.val(y).data[size_t((bb * n + i) * d + c)] ==
                doctest::Approx(x.value.data[size_t(bb * n + i)] *
                                    w.value.data[size_t(i * d + c)] +
                                b.value.data[size_t(i * d + c)])
                    .epsilon(1e-12));
  }
  check_op_gradient(rng, ps, [&](Graph<double>& g) {
    return scalar_tokens(g, g.param(x), g.param(w), g.param(b));
  });
}

TEST_CASE("film1d applies (1 + scale, shift) per channel") {
  Rng rng(43);
  const int B = 2, C = 3, L = 4;
  ParamStore<double> ps;
  auto& x = add_normal(ps, rng, "x", {B, C, L});
  auto& st = add_normal(ps, rng, "st", {B, 2 * C});
  {
    Graph<double> g(false);
    Var<double> y = film1d(g, g.param(x), g.param(st));
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c)
        for (int l = 0; l < L; ++l) {
          double s = st.value.data[size_t(b * 2 * C + c)];
          double t = st.value.data[size_t(b * 2 * C + C + c)];
          CHECK(g.val(y).data[size_t((b * C + c) * L + l)] ==
                doctest::Approx(x.value.data[size_t((b * C + c) * L + l)] *
                                    (1.0 + s) +
                                t)
                    .epsilon(1e-12));
        }
  }
  check_op_gradient(rng, ps, [&](Graph<double>& g) {
    return film1d(g, g.param(x), g.param(st));
  });
}

TEST_CASE("upsample_nearest1d duplicates and tokens_from_map transposes") {
  Rng rng(47);
  ParamStore<double> ps;
  auto& x = add_normal(ps, rng, "x", {2, 3, 4});
  auto& m = add_normal(ps, rng, "m", {2, 3, 2, 2});
  {
    Graph<double> g(false);
    Var<double> y = upsample_nearest1d(g, g.param(x));
    CHECK(g.val(y).shape == std::vector<int>{2, 3, 8});
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 3; ++c)
        for (int l = 0; l < 8; ++l)
          CHECK(g.val(y).data[size_t((b * 3 + c) * 8 + l)] ==
                x.value.data[size_t((b * 3 + c) * 4 + l / 2)]);

    Var<double> t = tokens_from_map(g, g.param(m));
    CHECK(g.val(t).shape == std::vector<int>{2, 4, 3});
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            CHECK(g.val(t).data[size_t((b * 4 + i * 2 + j) * 3 + c)] ==
                  m.value.data[size_t(((b * 3 + c) * 2 + i) * 2 + j)]);
  }
  check_op_gradient(rng, ps, [&](Graph<double>& g) {
    Var<double> u = upsample_nearest1d(g, g.param(x));
    Var<double> t = tokens_from_map(g, g.param(m));
    return concat_cols(g, {reshape(g, u, {2, 24}), reshape(g, t, {2, 12})});
  });
}

TEST_CASE("mse value and symmetry") {
  Rng rng(53);
  ParamStore<double> ps;
  auto& a = add_normal(ps, rng, "a", {3, 4});
  Tensor<double> t({3, 4});
  fill_normal(rng, t);
  Graph<double> g(true);
  Var<double> loss = mse(g, g.param(a), g.input(t));
  double ref = 0;
  for (size_t i = 0; i < 12; ++i) {
    double d = a.value.data[i] - t.data[i];
    ref += d * d;
  }
  CHECK(g.val(loss).data[0] == doctest::Approx(ref / 12).epsilon(1e-12));
  g.backward(loss);
  for (size_t i = 0; i < 12; ++i)
    CHECK(a.grad.data[i] ==
          doctest::Approx(2.0 / 12 * (a.value.data[i] - t.data[i]))
              .epsilon(1e-12));
}

TEST_CASE("shared parameters accumulate gradients once per use") {
  Rng rng(59);
  ParamStore<double> ps;
  auto& a = add_normal(ps, rng, "a", {2, 2});
  // loss = mean((a + a)^2) = sum(a_i^2), so dL/da_i = 2 a_i.
  Tensor<double> zero({2, 2});
  zero.fill(0.0);
  Graph<double> g(true);
  Var<double> y = add(g, g.param(a), g.param(a));
  Var<double> loss = mse(g, y, g.input(zero));
  g.backward(loss);
  for (size_t i = 0; i < 4; ++i)
    CHECK(a.grad.data[i] ==
          doctest::Approx(2.0 * a.value.data[i]).epsilon(1e-12));
}

TEST_CASE("inference graphs record no backward state") {
  Rng rng(61);
  ParamStore<double> ps;
  auto& a = add_normal(ps, rng, "a", {2, 2});
  Graph<double> g(false);
  Var<double> y = mish(g, g.param(a));
  CHECK_FALSE(g.needs_grad(y));
  Tensor<double> t({2, 2});
  Var<double> loss = mse(g, y, g.input(t));
  CHECK_THROWS(g.backward(loss));
}
