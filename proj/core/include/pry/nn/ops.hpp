#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "pry/nn/graph.hpp"

namespace pry::nn {

// Every backward closure guards parent accumulation with this: inputs that
// do not require grads never allocate one.
template <class S, class F>
void accum(Graph<S>& g, Var<S> p, F&& write) {
  if (g.needs_grad(p)) write(g.grad(p));
}

// ---- elementwise ----------------------------------------------------------

template <class S>
Var<S> add(Graph<S>& g, Var<S> a, Var<S> b) {
  const Tensor<S>& ta = g.val(a);
  const Tensor<S>& tb = g.val(b);
  require(same_shape(ta, tb), "add: shape mismatch");
  Tensor<S> out(ta.shape);
  out.vec() = ta.vec() + tb.vec();
  return g.make(std::move(out), {a, b}, [a, b](Graph<S>& gg, int self) {
    const auto& dy = gg.grad(Var<S>{self});
    accum(gg, a, [&](Tensor<S>& da) { da.vec() += dy.vec(); });
    accum(gg, b, [&](Tensor<S>& db) { db.vec() += dy.vec(); });
  });
}

template <class S>
Var<S> scale(Graph<S>& g, Var<S> a, double s) {
  Tensor<S> out(g.val(a).shape);
  out.vec() = g.val(a).vec() * S(s);
  return g.make(std::move(out), {a}, [a, s](Graph<S>& gg, int self) {
    const auto& dy = gg.grad(Var<S>{self});
    accum(gg, a, [&](Tensor<S>& da) { da.vec() += S(s) * dy.vec(); });
  });
}

template <class S>
Var<S> mul(Graph<S>& g, Var<S> a, Var<S> b) {
  const Tensor<S>& ta = g.val(a);
  const Tensor<S>& tb = g.val(b);
  require(same_shape(ta, tb), "mul: shape mismatch");
  Tensor<S> out(ta.shape);
  out.vec() = ta.vec().cwiseProduct(tb.vec());
  return g.make(std::move(out), {a, b}, [a, b](Graph<S>& gg, int self) {
    const auto& dy = gg.grad(Var<S>{self});
    accum(gg, a, [&](Tensor<S>& da) {
      da.vec() += dy.vec().cwiseProduct(gg.val(b).vec());
    });
    accum(gg, b, [&](Tensor<S>& db) {
      db.vec() += dy.vec().cwiseProduct(gg.val(a).vec());
    });
  });
}

template <class S>
Var<S> mish(Graph<S>& g, Var<S> x) {
  const Tensor<S>& tx = g.val(x);
  Tensor<S> out(tx.shape);
  // Save tanh(softplus(x)) and sigmoid(x) for the derivative.
  auto saved = std::make_shared<Tensor<S>>(tx.shape);
  auto sig = std::make_shared<Tensor<S>>(tx.shape);
  const i64 n = tx.numel();
  for (i64 i = 0; i < n; ++i) {
    const S v = tx.data[size_t(i)];
    const S sp = v > S(20) ? v : S(std::log1p(std::exp(double(v))));
    const S t = S(std::tanh(double(sp)));
    saved->data[size_t(i)] = t;
    sig->data[size_t(i)] = S(1) / (S(1) + S(std::exp(double(-v))));
    out.data[size_t(i)] = v * t;
  }
  return g.make(std::move(out), {x},
                [x, saved, sig](Graph<S>& gg, int self) {
                  const auto& dy = gg.grad(Var<S>{self});
                  accum(gg, x, [&](Tensor<S>& dx) {
                    const Tensor<S>& tx = gg.val(x);
                    const i64 n = tx.numel();
                    for (i64 i = 0; i < n; ++i) {
                      const S t = saved->data[size_t(i)];
                      const S s = sig->data[size_t(i)];
                      const S v = tx.data[size_t(i)];
                      dx.data[size_t(i)] +=
                          dy.data[size_t(i)] * (t + v * (S(1) - t * t) * s);
                    }
                  });
                });
}

// ---- shape plumbing -------------------------------------------------------

template <class S>
Var<S> reshape(Graph<S>& g, Var<S> x, std::vector<int> shape) {
  const Tensor<S>& tx = g.val(x);
  require(Tensor<S>::numel_of(shape) == tx.numel(),
          "reshape: element count mismatch");
  Tensor<S> out(std::move(shape));
  out.data = tx.data;
  return g.make(std::move(out), {x}, [x](Graph<S>& gg, int self) {
    const auto& dy = gg.grad(Var<S>{self});
    accum(gg, x, [&](Tensor<S>& dx) { dx.vec() += dy.vec(); });
  });
}

template <class S>
Var<S> concat_cols(Graph<S>& g, const std::vector<Var<S>>& parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const int rows = g.val(parts[0]).dim(0);
  int cols = 0;
  for (Var<S> p : parts) {
    require(g.val(p).ndim() == 2 && g.val(p).dim(0) == rows,
            "concat_cols: need matching 2-d rows");
    cols += g.val(p).dim(1);
  }
  Tensor<S> out({rows, cols});
  auto om = out.mat(rows, cols);
  int at = 0;
  for (Var<S> p : parts) {
    const int c = g.val(p).dim(1);
    om.middleCols(at, c) = g.val(p).mat(rows, c);
    at += c;
  }
  return g.make(std::move(out), parts, [parts, rows](Graph<S>& gg, int self) {
    const Tensor<S>& dyt = gg.grad(Var<S>{self});
    const auto dy = dyt.mat(rows, dyt.dim(1));
    int at = 0;
    for (Var<S> p : parts) {
      const int c = gg.val(p).dim(1);
      accum(gg, p, [&](Tensor<S>& dp) {
        dp.mat(rows, c) += dy.middleCols(at, c);
      });
      at += c;
    }
  });
}

template <class S>
Var<S> concat_channels1d(Graph<S>& g, Var<S> a, Var<S> b) {
  const Tensor<S>& ta = g.val(a);
  const Tensor<S>& tb = g.val(b);
  require(ta.ndim() == 3 && tb.ndim() == 3 && ta.dim(0) == tb.dim(0) &&
              ta.dim(2) == tb.dim(2),
          "concat_channels1d: need [B,C,L] with same B, L");
  const int B = ta.dim(0), C1 = ta.dim(1), C2 = tb.dim(1), L = ta.dim(2);
  Tensor<S> out({B, C1 + C2, L});
  for (int bb = 0; bb < B; ++bb) {
    std::copy_n(ta.ptr() + i64(bb) * C1 * L, i64(C1) * L,
                out.ptr() + i64(bb) * (C1 + C2) * L);
    std::copy_n(tb.ptr() + i64(bb) * C2 * L, i64(C2) * L,
                out.ptr() + i64(bb) * (C1 + C2) * L + i64(C1) * L);
  }
  return g.make(
      std::move(out), {a, b}, [a, b, B, C1, C2, L](Graph<S>& gg, int self) {
        const Tensor<S>& dy = gg.grad(Var<S>{self});
        accum(gg, a, [&](Tensor<S>& da) {
          for (int bb = 0; bb < B; ++bb)
            Eigen::Map<VectorX<S>>(da.ptr() + i64(bb) * C1 * L,
                                   i64(C1) * L) +=
                Eigen::Map<const VectorX<S>>(
                    dy.ptr() + i64(bb) * (C1 + C2) * L, i64(C1) * L);
        });
        accum(gg, b, [&](Tensor<S>& db) {
          for (int bb = 0; bb < B; ++bb)
            Eigen::Map<VectorX<S>>(db.ptr() + i64(bb) * C2 * L,
                                   i64(C2) * L) +=
                Eigen::Map<const VectorX<S>>(
                    dy.ptr() + i64(bb) * (C1 + C2) * L + i64(C1) * L,
                    i64(C2) * L);
        });
      });
}

// ---- dense products -------------------------------------------------------

template <class S>
Var<S> matmul(Graph<S>& g, Var<S> a, Var<S> b) {
  const Tensor<S>& ta = g.val(a);
  const Tensor<S>& tb = g.val(b);
  require(ta.ndim() == 2 && tb.ndim() == 2 && ta.dim(1) == tb.dim(0),
          "matmul: shape mismatch");
  const int m = ta.dim(0), k = ta.dim(1), n = tb.dim(1);
  Tensor<S> out({m, n});
  out.mat(m, n).noalias() = ta.mat(m, k) * tb.mat(k, n);
  return g.make(std::move(out), {a, b}, [a, b, m, k, n](Graph<S>& gg,
                                                        int self) {
    const auto dy = gg.grad(Var<S>{self}).mat(m, n);
    accum(gg, a, [&](Tensor<S>& da) {
      da.mat(m, k).noalias() += dy * gg.val(b).mat(k, n).transpose();
    });
    accum(gg, b, [&](Tensor<S>& db) {
      db.mat(k, n).noalias() += gg.val(a).mat(m, k).transpose() * dy;
    });
  });
}

// y = x W^T (+ bias), weight stored [out, in].
template <class S>
Var<S> linear(Graph<S>& g, Var<S> x, Var<S> w, Var<S> bias = Var<S>{}) {
  const Tensor<S>& tx = g.val(x);
  const Tensor<S>& tw = g.val(w);
  require(tx.ndim() == 2 && tw.ndim() == 2 && tx.dim(1) == tw.dim(1),
          "linear: shape mismatch");
  const int m = tx.dim(0), in = tx.dim(1), out_dim = tw.dim(0);
  Tensor<S> out({m, out_dim});
  out.mat(m, out_dim).noalias() =
      tx.mat(m, in) * tw.mat(out_dim, in).transpose();
  const bool has_bias = bias.id >= 0;
  if (has_bias) {
    require(g.val(bias).numel() == out_dim, "linear: bias size mismatch");
    out.mat(m, out_dim).rowwise() += g.val(bias).vec().transpose();
  }
  std::vector<Var<S>> parents{x, w};
  if (has_bias) parents.push_back(bias);
  return g.make(
      std::move(out), parents,
      [x, w, bias, has_bias, m, in, out_dim](Graph<S>& gg, int self) {
        const auto dy = gg.grad(Var<S>{self}).mat(m, out_dim);
        accum(gg, x, [&](Tensor<S>& dx) {
          dx.mat(m, in).noalias() += dy * gg.val(w).mat(out_dim, in);
        });
        accum(gg, w, [&](Tensor<S>& dw) {
          dw.mat(out_dim, in).noalias() +=
              dy.transpose() * gg.val(x).mat(m, in);
        });
        if (has_bias)
          accum(gg, bias, [&](Tensor<S>& db) {
            db.vec() += dy.colwise().sum().transpose();
          });
      });
}

// ---- convolutions ---------------------------------------------------------

namespace detail {

// col has one row per output position (b-major), one column per
// (ci, kh, kw) tap. Replicate padding clamps source coordinates.
template <class S>
void im2col2d(const Tensor<S>& x, int kh, int kw, int stride, int pad,
              int Ho, int Wo, MatrixRM<S>& col) {
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  col.resize(i64(B) * Ho * Wo, i64(C) * kh * kw);
  for (int b = 0; b < B; ++b) {
    const S* xb = x.ptr() + i64(b) * C * H * W;
    for (int oh = 0; oh < Ho; ++oh)
      for (int ow = 0; ow < Wo; ++ow) {
        S* row = col.data() + (i64(b) * Ho * Wo + i64(oh) * Wo + ow) *
                                  col.cols();
        for (int c = 0; c < C; ++c) {
          const S* xc = xb + i64(c) * H * W;
          for (int r = 0; r < kh; ++r) {
            int ih = oh * stride - pad + r;
            ih = ih < 0 ? 0 : (ih >= H ? H - 1 : ih);
            for (int q = 0; q < kw; ++q) {
              int iw = ow * stride - pad + q;
              iw = iw < 0 ? 0 : (iw >= W ? W - 1 : iw);
              *row++ = xc[i64(ih) * W + iw];
            }
          }
        }
      }
  }
}

template <class S>
void col2im2d_add(const MatrixRM<S>& dcol, int B, int C, int H, int W,
                  int kh, int kw, int stride, int pad, int Ho, int Wo,
                  Tensor<S>& dx) {
  for (int b = 0; b < B; ++b) {
    S* xb = dx.ptr() + i64(b) * C * H * W;
    for (int oh = 0; oh < Ho; ++oh)
      for (int ow = 0; ow < Wo; ++ow) {
        const S* row = dcol.data() + (i64(b) * Ho * Wo + i64(oh) * Wo + ow) *
                                         dcol.cols();
        for (int c = 0; c < C; ++c) {
          S* xc = xb + i64(c) * H * W;
          for (int r = 0; r < kh; ++r) {
            int ih = oh * stride - pad + r;
            ih = ih < 0 ? 0 : (ih >= H ? H - 1 : ih);
            for (int q = 0; q < kw; ++q) {
              int iw = ow * stride - pad + q;
              iw = iw < 0 ? 0 : (iw >= W ? W - 1 : iw);
              xc[i64(ih) * W + iw] += *row++;
            }
          }
        }
      }
  }
}

template <class S>
void im2col1d(const Tensor<S>& x, int k, int stride, int pad, int Lo,
              MatrixRM<S>& col) {
  const int B = x.dim(0), C = x.dim(1), L = x.dim(2);
  col.resize(i64(B) * Lo, i64(C) * k);
  for (int b = 0; b < B; ++b) {
    const S* xb = x.ptr() + i64(b) * C * L;
    for (int ol = 0; ol < Lo; ++ol) {
      S* row = col.data() + (i64(b) * Lo + ol) * col.cols();
      for (int c = 0; c < C; ++c) {
        const S* xc = xb + i64(c) * L;
        for (int r = 0; r < k; ++r) {
          const int il = ol * stride - pad + r;
          *row++ = (il < 0 || il >= L) ? S(0) : xc[il];
        }
      }
    }
  }
}

template <class S>
void col2im1d_add(const MatrixRM<S>& dcol, int B, int C, int L, int k,
                  int stride, int pad, int Lo, Tensor<S>& dx) {
  for (int b = 0; b < B; ++b) {
    S* xb = dx.ptr() + i64(b) * C * L;
    for (int ol = 0; ol < Lo; ++ol) {
      const S* row = dcol.data() + (i64(b) * Lo + ol) * dcol.cols();
      for (int c = 0; c < C; ++c) {
        S* xc = xb + i64(c) * L;
        for (int r = 0; r < k; ++r) {
          const int il = ol * stride - pad + r;
          if (il >= 0 && il < L) xc[il] += *row;
          ++row;
        }
      }
    }
  }
}

}  // namespace detail

// 2-d convolution with replicate padding (matches the renderer's hard
// image borders better than zero pad). Weight [Co, Ci, kh, kw].
template <class S>
Var<S> conv2d(Graph<S>& g, Var<S> x, Var<S> w, Var<S> bias, int stride,
              int pad) {
  const Tensor<S>& tx = g.val(x);
  const Tensor<S>& tw = g.val(w);
  require(tx.ndim() == 4 && tw.ndim() == 4 && tx.dim(1) == tw.dim(1),
          "conv2d: shape mismatch");
  const int B = tx.dim(0), C = tx.dim(1), H = tx.dim(2), W = tx.dim(3);
  const int Co = tw.dim(0), kh = tw.dim(2), kw = tw.dim(3);
  const int Ho = (H + 2 * pad - kh) / stride + 1;
  const int Wo = (W + 2 * pad - kw) / stride + 1;
  require(Ho > 0 && Wo > 0, "conv2d: output would be empty");

  auto col = std::make_shared<MatrixRM<S>>();
  detail::im2col2d(tx, kh, kw, stride, pad, Ho, Wo, *col);
  const i64 rows = col->rows();
  const i64 taps = col->cols();

  MatrixRM<S> y2(rows, Co);
  y2.noalias() = *col * g.val(w).mat(Co, taps).transpose();
  if (bias.id >= 0) y2.rowwise() += g.val(bias).vec().transpose();

  Tensor<S> out({B, Co, Ho, Wo});
  const i64 sp = i64(Ho) * Wo;
  for (int b = 0; b < B; ++b)
    Eigen::Map<MatrixRM<S>>(out.ptr() + i64(b) * Co * sp, Co, sp).noalias() =
        y2.middleRows(i64(b) * sp, sp).transpose();

  std::vector<Var<S>> parents{x, w};
  if (bias.id >= 0) parents.push_back(bias);
  return g.make(
      std::move(out), parents,
      [x, w, bias, col, B, C, H, W, Co, kh, kw, stride, pad, Ho,
       Wo](Graph<S>& gg, int self) {
        const Tensor<S>& dyt = gg.grad(Var<S>{self});
        const i64 sp = i64(Ho) * Wo;
        MatrixRM<S> dy2(i64(B) * sp, Co);
        for (int b = 0; b < B; ++b)
          dy2.middleRows(i64(b) * sp, sp).noalias() =
              Eigen::Map<const MatrixRM<S>>(dyt.ptr() + i64(b) * Co * sp, Co,
                                            sp)
                  .transpose();
        accum(gg, w, [&](Tensor<S>& dw) {
          dw.mat(Co, col->cols()).noalias() += dy2.transpose() * (*col);
        });
        if (bias.id >= 0)
          accum(gg, bias, [&](Tensor<S>& db) {
            db.vec() += dy2.colwise().sum().transpose();
          });
        accum(gg, x, [&](Tensor<S>& dx) {
          MatrixRM<S> dcol(dy2.rows(), col->cols());
          dcol.noalias() = dy2 * gg.val(w).mat(Co, col->cols());
          detail::col2im2d_add(dcol, B, C, H, W, kh, kw, stride, pad, Ho, Wo,
                               dx);
        });
      });
}

// 1-d convolution with zero padding. Weight [Co, Ci, k].
template <class S>
Var<S> conv1d(Graph<S>& g, Var<S> x, Var<S> w, Var<S> bias, int stride,
              int pad) {
  const Tensor<S>& tx = g.val(x);
  const Tensor<S>& tw = g.val(w);
  require(tx.ndim() == 3 && tw.ndim() == 3 && tx.dim(1) == tw.dim(1),
          "conv1d: shape mismatch");
  const int B = tx.dim(0), C = tx.dim(1), L = tx.dim(2);
  const int Co = tw.dim(0), k = tw.dim(2);
  const int Lo = (L + 2 * pad - k) / stride + 1;
  require(Lo > 0, "conv1d: output would be empty");

  auto col = std::make_shared<MatrixRM<S>>();
  detail::im2col1d(tx, k, stride, pad, Lo, *col);

  MatrixRM<S> y2(col->rows(), Co);
  y2.noalias() = *col * g.val(w).mat(Co, col->cols()).transpose();
  if (bias.id >= 0) y2.rowwise() += g.val(bias).vec().transpose();

  Tensor<S> out({B, Co, Lo});
  for (int b = 0; b < B; ++b)
    Eigen::Map<MatrixRM<S>>(out.ptr() + i64(b) * Co * Lo, Co, Lo).noalias() =
        y2.middleRows(i64(b) * Lo, Lo).transpose();

  std::vector<Var<S>> parents{x, w};
  if (bias.id >= 0) parents.push_back(bias);
  return g.make(
      std::move(out), parents,
      [x, w, bias, col, B, C, L, Co, k, stride, pad, Lo](Graph<S>& gg,
                                                         int self) {
        const Tensor<S>& dyt = gg.grad(Var<S>{self});
        MatrixRM<S> dy2(i64(B) * Lo, Co);
        for (int b = 0; b < B; ++b)
          dy2.middleRows(i64(b) * Lo, Lo).noalias() =
              Eigen::Map<const MatrixRM<S>>(dyt.ptr() + i64(b) * Co * Lo, Co,
                                            Lo)
                  .transpose();
        accum(gg, w, [&](Tensor<S>& dw) {
          dw.mat(Co, col->cols()).noalias() += dy2.transpose() * (*col);
        });
        if (bias.id >= 0)
          accum(gg, bias, [&](Tensor<S>& db) {
            db.vec() += dy2.colwise().sum().transpose();
          });
        accum(gg, x, [&](Tensor<S>& dx) {
          MatrixRM<S> dcol(dy2.rows(), col->cols());
          dcol.noalias() = dy2 * gg.val(w).mat(Co, col->cols());
          detail::col2im1d_add(dcol, B, C, L, k, stride, pad, Lo, dx);
        });
      });
}

// ---- normalization --------------------------------------------------------

// GroupNorm over [B, C, ...spatial]; statistics per (batch, group).
template <class S>
Var<S> group_norm(Graph<S>& g, Var<S> x, Var<S> gamma, Var<S> beta,
                  int groups, double eps = 1e-5) {
  const Tensor<S>& tx = g.val(x);
  require(tx.ndim() >= 2, "group_norm: need [B, C, ...]");
  const int B = tx.dim(0), C = tx.dim(1);
  require(C % groups == 0, "group_norm: channels not divisible by groups");
  require(g.val(gamma).numel() == C && g.val(beta).numel() == C,
          "group_norm: affine size mismatch");
  const i64 sp = tx.numel() / (i64(B) * C);
  const int cg = C / groups;
  const i64 m = i64(cg) * sp;

  auto xhat = std::make_shared<Tensor<S>>(tx.shape);
  auto inv = std::make_shared<Tensor<S>>(std::vector<int>{B, groups});
  Tensor<S> out(tx.shape);
  const S* gam = g.val(gamma).ptr();
  const S* bet = g.val(beta).ptr();
  for (int b = 0; b < B; ++b)
    for (int gr = 0; gr < groups; ++gr) {
      const i64 base = (i64(b) * C + i64(gr) * cg) * sp;
      Eigen::Map<const VectorX<S>> xm(tx.ptr() + base, m);
      const S mu = xm.mean();
      const S var = (xm.array() - mu).square().sum() / S(m);
      const S is = S(1) / std::sqrt(var + S(eps));
      inv->data[size_t(b) * groups + size_t(gr)] = is;
      Eigen::Map<VectorX<S>> xh(xhat->ptr() + base, m);
      xh = (xm.array() - mu) * is;
      for (int c = 0; c < cg; ++c) {
        const int ch = gr * cg + c;
        Eigen::Map<VectorX<S>> yo(out.ptr() + base + i64(c) * sp, sp);
        Eigen::Map<const VectorX<S>> xc(xhat->ptr() + base + i64(c) * sp, sp);
        yo = xc.array() * gam[ch] + bet[ch];
      }
    }

  return g.make(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, xhat, inv, B, C, groups, cg, sp](Graph<S>& gg,
                                                        int self) {
        const Tensor<S>& dy = gg.grad(Var<S>{self});
        const i64 m = i64(cg) * sp;
        accum(gg, gamma, [&](Tensor<S>& dg) {
          for (int c = 0; c < C; ++c) {
            S acc = 0;
            for (int b = 0; b < B; ++b) {
              const i64 base = (i64(b) * C + c) * sp;
              Eigen::Map<const VectorX<S>> d(dy.ptr() + base, sp);
              Eigen::Map<const VectorX<S>> xh(xhat->ptr() + base, sp);
              acc += d.dot(xh);
            }
            dg.data[size_t(c)] += acc;
          }
        });
        accum(gg, beta, [&](Tensor<S>& db) {
          for (int c = 0; c < C; ++c) {
            S acc = 0;
            for (int b = 0; b < B; ++b)
              acc += Eigen::Map<const VectorX<S>>(
                         dy.ptr() + (i64(b) * C + c) * sp, sp)
                         .sum();
            db.data[size_t(c)] += acc;
          }
        });
        accum(gg, x, [&](Tensor<S>& dx) {
          const S* gam = gg.val(gamma).ptr();
          VectorX<S> dxh(m);
          for (int b = 0; b < B; ++b)
            for (int gr = 0; gr < groups; ++gr) {
              const i64 base = (i64(b) * C + i64(gr) * cg) * sp;
              for (int c = 0; c < cg; ++c)
                Eigen::Map<VectorX<S>>(dxh.data() + i64(c) * sp, sp) =
                    Eigen::Map<const VectorX<S>>(dy.ptr() + base + i64(c) * sp,
                                                 sp)
                        .array() *
                    gam[gr * cg + c];
              Eigen::Map<const VectorX<S>> xh(xhat->ptr() + base, m);
              const S is = inv->data[size_t(b) * groups + size_t(gr)];
              const S m1 = dxh.mean();
              const S m2 = dxh.dot(xh) / S(m);
              Eigen::Map<VectorX<S>> out(dx.ptr() + base, m);
              out.array() +=
                  is * (dxh.array() - m1 - xh.array() * m2);
            }
        });
      });
}

// ---- reductions / softmaxes ------------------------------------------------

template <class S>
Var<S> softmax_rows(Graph<S>& g, Var<S> x) {
  const Tensor<S>& tx = g.val(x);
  require(tx.ndim() == 2, "softmax_rows: need [m, n]");
  const int m = tx.dim(0), n = tx.dim(1);
  Tensor<S> out({m, n});
  auto xm = tx.mat(m, n);
  auto ym = out.mat(m, n);
  for (int i = 0; i < m; ++i) {
    const S mx = xm.row(i).maxCoeff();
    ym.row(i) = (xm.row(i).array() - mx).exp();
    ym.row(i) /= ym.row(i).sum();
  }
  return g.make(std::move(out), {x}, [x, m, n](Graph<S>& gg, int self) {
    const auto dy = gg.grad(Var<S>{self}).mat(m, n);
    const auto y = gg.val(Var<S>{self}).mat(m, n);
    accum(gg, x, [&](Tensor<S>& dx) {
      auto dxm = dx.mat(m, n);
      for (int i = 0; i < m; ++i) {
        const S dot = dy.row(i).dot(y.row(i));
        dxm.row(i).array() +=
            y.row(i).array() * (dy.row(i).array() - dot);
      }
    });
  });
}

template <class S>
Var<S> global_avg_pool2d(Graph<S>& g, Var<S> x) {
  const Tensor<S>& tx = g.val(x);
  require(tx.ndim() == 4, "global_avg_pool2d: need [B,C,H,W]");
  const int B = tx.dim(0), C = tx.dim(1);
  const i64 sp = i64(tx.dim(2)) * tx.dim(3);
  Tensor<S> out({B, C});
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      out.data[size_t(b) * C + size_t(c)] =
          Eigen::Map<const VectorX<S>>(tx.ptr() + (i64(b) * C + c) * sp, sp)
              .mean();
  return g.make(std::move(out), {x}, [x, B, C, sp](Graph<S>& gg, int self) {
    const Tensor<S>& dy = gg.grad(Var<S>{self});
    accum(gg, x, [&](Tensor<S>& dx) {
      for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c)
          Eigen::Map<VectorX<S>>(dx.ptr() + (i64(b) * C + c) * sp, sp)
              .array() += dy.data[size_t(b) * C + size_t(c)] / S(sp);
    });
  });
}

template <class S>
Var<S> mean_tokens(Graph<S>& g, Var<S> x) {
  const Tensor<S>& tx = g.val(x);
  require(tx.ndim() == 3, "mean_tokens: need [B,N,D]");
  const int B = tx.dim(0), N = tx.dim(1), D = tx.dim(2);
  Tensor<S> out({B, D});
  for (int b = 0; b < B; ++b) {
    Eigen::Map<const MatrixRM<S>> xb(tx.ptr() + i64(b) * N * D, N, D);
    out.mat(B, D).row(b) = xb.colwise().mean();
  }
  return g.make(std::move(out), {x}, [x, B, N, D](Graph<S>& gg, int self) {
    const auto dy = gg.grad(Var<S>{self}).mat(B, D);
    accum(gg, x, [&](Tensor<S>& dx) {
      for (int b = 0; b < B; ++b)
        Eigen::Map<MatrixRM<S>>(dx.ptr() + i64(b) * N * D, N, D).rowwise() +=
            dy.row(b) / S(N);
    });
  });
}

// Expected image coordinates under a per-channel softmax: [B, 2C] with the
// first C entries E[gx] and the last C entries E[gy], grid in [-1, 1].
template <class S>
Var<S> spatial_softmax(Graph<S>& g, Var<S> x) {
  const Tensor<S>& tx = g.val(x);
  require(tx.ndim() == 4, "spatial_softmax: need [B,C,H,W]");
  const int B = tx.dim(0), C = tx.dim(1), H = tx.dim(2), W = tx.dim(3);
  const i64 sp = i64(H) * W;
  auto probs = std::make_shared<Tensor<S>>(tx.shape);
  auto grid = std::make_shared<Tensor<S>>(std::vector<int>{2, H, W});
  for (int h = 0; h < H; ++h)
    for (int w = 0; w < W; ++w) {
      grid->data[size_t(h) * W + w] =
          W > 1 ? S(-1) + S(2) * w / S(W - 1) : S(0);
      grid->data[sp + size_t(h) * W + w] =
          H > 1 ? S(-1) + S(2) * h / S(H - 1) : S(0);
    }
  Tensor<S> out({B, 2 * C});
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const i64 base = (i64(b) * C + c) * sp;
      Eigen::Map<const VectorX<S>> xc(tx.ptr() + base, sp);
      Eigen::Map<VectorX<S>> p(probs->ptr() + base, sp);
      const S mx = xc.maxCoeff();
      p = (xc.array() - mx).exp();
      p /= p.sum();
      Eigen::Map<const VectorX<S>> gx(grid->ptr(), sp);
      Eigen::Map<const VectorX<S>> gy(grid->ptr() + sp, sp);
      out.data[size_t(b) * 2 * C + size_t(c)] = p.dot(gx);
      out.data[size_t(b) * 2 * C + size_t(C + c)] = p.dot(gy);
    }
  return g.make(
      std::move(out), {x},
      [x, probs, grid, B, C, sp](Graph<S>& gg, int self) {
        const Tensor<S>& dy = gg.grad(Var<S>{self});
        const Tensor<S>& y = gg.val(Var<S>{self});
        accum(gg, x, [&](Tensor<S>& dx) {
          Eigen::Map<const VectorX<S>> gx(grid->ptr(), sp);
          Eigen::Map<const VectorX<S>> gy(grid->ptr() + sp, sp);
          for (int b = 0; b < B; ++b)
            for (int c = 0; c < C; ++c) {
              const i64 base = (i64(b) * C + c) * sp;
              const S dox = dy.data[size_t(b) * 2 * C + size_t(c)];
              const S doy = dy.data[size_t(b) * 2 * C + size_t(C + c)];
              const S ex = y.data[size_t(b) * 2 * C + size_t(c)];
              const S ey = y.data[size_t(b) * 2 * C + size_t(C + c)];
              Eigen::Map<const VectorX<S>> p(probs->ptr() + base, sp);
              Eigen::Map<VectorX<S>> d(dx.ptr() + base, sp);
              d.array() += p.array() * (dox * gx.array() + doy * gy.array() -
                                        (dox * ex + doy * ey));
            }
        });
      });
}

// ---- attention ------------------------------------------------------------

// Multi-head scaled dot-product attention; q [B,nq,d], k/v [B,nk,d].
template <class S>
Var<S> attention(Graph<S>& g, Var<S> q, Var<S> k, Var<S> v, int heads) {
  const Tensor<S>& tq = g.val(q);
  const Tensor<S>& tk = g.val(k);
  const Tensor<S>& tv = g.val(v);
  require(tq.ndim() == 3 && tk.ndim() == 3 && tv.ndim() == 3,
          "attention: need [B,n,d]");
  const int B = tq.dim(0), nq = tq.dim(1), d = tq.dim(2);
  const int nk = tk.dim(1);
  require(tk.dim(0) == B && tv.dim(0) == B && tk.dim(2) == d &&
              tv.dim(2) == d && tv.dim(1) == nk,
          "attention: shape mismatch");
  require(d % heads == 0, "attention: d not divisible by heads");
  const int dh = d / heads;
  const S sc = S(1.0 / std::sqrt(double(dh)));

  auto probs =
      std::make_shared<Tensor<S>>(std::vector<int>{B, heads, nq, nk});
  Tensor<S> out({B, nq, d});

  // Head h of sample b is the column block [h*dh, (h+1)*dh).
  for (int b = 0; b < B; ++b) {
    Eigen::Map<const MatrixRM<S>> qb(tq.ptr() + i64(b) * nq * d, nq, d);
    Eigen::Map<const MatrixRM<S>> kb(tk.ptr() + i64(b) * nk * d, nk, d);
    Eigen::Map<const MatrixRM<S>> vb(tv.ptr() + i64(b) * nk * d, nk, d);
    Eigen::Map<MatrixRM<S>> ob(out.ptr() + i64(b) * nq * d, nq, d);
    for (int h = 0; h < heads; ++h) {
      Eigen::Map<MatrixRM<S>> p(
          probs->ptr() + ((i64(b) * heads + h) * nq) * nk, nq, nk);
      p.noalias() = sc * qb.middleCols(h * dh, dh) *
                    kb.middleCols(h * dh, dh).transpose();
      for (int i = 0; i < nq; ++i) {
        const S mx = p.row(i).maxCoeff();
        p.row(i) = (p.row(i).array() - mx).exp();
        p.row(i) /= p.row(i).sum();
      }
      ob.middleCols(h * dh, dh).noalias() = p * vb.middleCols(h * dh, dh);
    }
  }

  return g.make(
      std::move(out), {q, k, v},
      [q, k, v, probs, B, nq, nk, d, heads, dh, sc](Graph<S>& gg, int self) {
        const Tensor<S>& dyt = gg.grad(Var<S>{self});
        const bool nq_ = gg.needs_grad(q), nk_ = gg.needs_grad(k),
                   nv_ = gg.needs_grad(v);
        Tensor<S>* dqt = nq_ ? &gg.grad(q) : nullptr;
        Tensor<S>* dkt = nk_ ? &gg.grad(k) : nullptr;
        Tensor<S>* dvt = nv_ ? &gg.grad(v) : nullptr;
        for (int b = 0; b < B; ++b) {
          Eigen::Map<const MatrixRM<S>> dy(dyt.ptr() + i64(b) * nq * d, nq,
                                           d);
          Eigen::Map<const MatrixRM<S>> qb(gg.val(q).ptr() + i64(b) * nq * d,
                                           nq, d);
          Eigen::Map<const MatrixRM<S>> kb(gg.val(k).ptr() + i64(b) * nk * d,
                                           nk, d);
          Eigen::Map<const MatrixRM<S>> vb(gg.val(v).ptr() + i64(b) * nk * d,
                                           nk, d);
          for (int h = 0; h < heads; ++h) {
            Eigen::Map<const MatrixRM<S>> p(
                probs->ptr() + ((i64(b) * heads + h) * nq) * nk, nq, nk);
            MatrixRM<S> dp(nq, nk);
            dp.noalias() = dy.middleCols(h * dh, dh) *
                           vb.middleCols(h * dh, dh).transpose();
            if (nv_)
              Eigen::Map<MatrixRM<S>>(dvt->ptr() + i64(b) * nk * d, nk, d)
                  .middleCols(h * dh, dh)
                  .noalias() += p.transpose() * dy.middleCols(h * dh, dh);
            MatrixRM<S> ds(nq, nk);
            for (int i = 0; i < nq; ++i) {
              const S dot = dp.row(i).dot(p.row(i));
              ds.row(i) =
                  p.row(i).array() * (dp.row(i).array() - dot);
            }
            if (nq_)
              Eigen::Map<MatrixRM<S>>(dqt->ptr() + i64(b) * nq * d, nq, d)
                  .middleCols(h * dh, dh)
                  .noalias() += sc * ds * kb.middleCols(h * dh, dh);
            if (nk_)
              Eigen::Map<MatrixRM<S>>(dkt->ptr() + i64(b) * nk * d, nk, d)
                  .middleCols(h * dh, dh)
                  .noalias() +=
                  sc * ds.transpose() * qb.middleCols(h * dh, dh);
          }
        }
      });
}

// ---- small structured ops ---------------------------------------------------

// Per-scalar embedding: token i of sample b is x[b,i] * W[i,:] + bias[i,:].
template <class S>
Var<S> scalar_tokens(Graph<S>& g, Var<S> x, Var<S> w, Var<S> bias) {
  const Tensor<S>& tx = g.val(x);
  const Tensor<S>& tw = g.val(w);
  require(tx.ndim() == 2 && tw.ndim() == 2 && tx.dim(1) == tw.dim(0),
          "scalar_tokens: shape mismatch");
  require(same_shape(tw, g.val(bias)), "scalar_tokens: bias mismatch");
  const int B = tx.dim(0), M = tx.dim(1), d = tw.dim(1);
  Tensor<S> out({B, M, d});
  for (int b = 0; b < B; ++b)
    for (int i = 0; i < M; ++i)
      Eigen::Map<VectorX<S>>(out.ptr() + (i64(b) * M + i) * d, d) =
          tx.data[size_t(b) * M + size_t(i)] *
              Eigen::Map<const VectorX<S>>(tw.ptr() + i64(i) * d, d) +
          Eigen::Map<const VectorX<S>>(g.val(bias).ptr() + i64(i) * d, d);
  return g.make(
      std::move(out), {x, w, bias},
      [x, w, bias, B, M, d](Graph<S>& gg, int self) {
        const Tensor<S>& dy = gg.grad(Var<S>{self});
        accum(gg, x, [&](Tensor<S>& dx) {
          for (int b = 0; b < B; ++b)
            for (int i = 0; i < M; ++i)
              dx.data[size_t(b) * M + size_t(i)] +=
                  Eigen::Map<const VectorX<S>>(dy.ptr() + (i64(b) * M + i) * d,
                                               d)
                      .dot(Eigen::Map<const VectorX<S>>(
                          gg.val(w).ptr() + i64(i) * d, d));
        });
        accum(gg, w, [&](Tensor<S>& dw) {
          for (int b = 0; b < B; ++b)
            for (int i = 0; i < M; ++i)
              Eigen::Map<VectorX<S>>(dw.ptr() + i64(i) * d, d) +=
                  gg.val(x).data[size_t(b) * M + size_t(i)] *
                  Eigen::Map<const VectorX<S>>(dy.ptr() + (i64(b) * M + i) * d,
                                               d);
        });
        accum(gg, bias, [&](Tensor<S>& db) {
          for (int b = 0; b < B; ++b)
            for (int i = 0; i < M; ++i)
              Eigen::Map<VectorX<S>>(db.ptr() + i64(i) * d, d) +=
                  Eigen::Map<const VectorX<S>>(dy.ptr() + (i64(b) * M + i) * d,
                                               d);
        });
      });
}

// FiLM over channels: y[b,c,l] = x[b,c,l] * (1 + s[b,c]) + t[b,c], where
// st packs [B, 2C] as (scale | shift).
template <class S>
Var<S> film1d(Graph<S>& g, Var<S> x, Var<S> st) {
  const Tensor<S>& tx = g.val(x);
  const Tensor<S>& ts = g.val(st);
  require(tx.ndim() == 3 && ts.ndim() == 2 && ts.dim(0) == tx.dim(0) &&
              ts.dim(1) == 2 * tx.dim(1),
          "film1d: shape mismatch");
  const int B = tx.dim(0), C = tx.dim(1), L = tx.dim(2);
  Tensor<S> out(tx.shape);
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const S s = ts.data[size_t(b) * 2 * C + size_t(c)];
      const S t = ts.data[size_t(b) * 2 * C + size_t(C + c)];
      const i64 base = (i64(b) * C + c) * L;
      Eigen::Map<VectorX<S>>(out.ptr() + base, L) =
          Eigen::Map<const VectorX<S>>(tx.ptr() + base, L).array() *
              (S(1) + s) +
          t;
    }
  return g.make(
      std::move(out), {x, st}, [x, st, B, C, L](Graph<S>& gg, int self) {
        const Tensor<S>& dy = gg.grad(Var<S>{self});
        accum(gg, x, [&](Tensor<S>& dx) {
          for (int b = 0; b < B; ++b)
            for (int c = 0; c < C; ++c) {
              const S s =
                  gg.val(st).data[size_t(b) * 2 * C + size_t(c)];
              const i64 base = (i64(b) * C + c) * L;
              Eigen::Map<VectorX<S>>(dx.ptr() + base, L).array() +=
                  Eigen::Map<const VectorX<S>>(dy.ptr() + base, L).array() *
                  (S(1) + s);
            }
        });
        accum(gg, st, [&](Tensor<S>& dst) {
          for (int b = 0; b < B; ++b)
            for (int c = 0; c < C; ++c) {
              const i64 base = (i64(b) * C + c) * L;
              Eigen::Map<const VectorX<S>> d(dy.ptr() + base, L);
              Eigen::Map<const VectorX<S>> xv(gg.val(x).ptr() + base, L);
              dst.data[size_t(b) * 2 * C + size_t(c)] += d.dot(xv);
              dst.data[size_t(b) * 2 * C + size_t(C + c)] += d.sum();
            }
        });
      });
}

template <class S>
Var<S> upsample_nearest1d(Graph<S>& g, Var<S> x) {
  const Tensor<S>& tx = g.val(x);
  require(tx.ndim() == 3, "upsample_nearest1d: need [B,C,L]");
  const int B = tx.dim(0), C = tx.dim(1), L = tx.dim(2);
  Tensor<S> out({B, C, 2 * L});
  for (i64 r = 0; r < i64(B) * C; ++r)
    for (int l = 0; l < L; ++l) {
      const S v = tx.data[size_t(r * L + l)];
      out.data[size_t(r * 2 * L + 2 * l)] = v;
      out.data[size_t(r * 2 * L + 2 * l + 1)] = v;
    }
  return g.make(std::move(out), {x}, [x, B, C, L](Graph<S>& gg, int self) {
    const Tensor<S>& dy = gg.grad(Var<S>{self});
    accum(gg, x, [&](Tensor<S>& dx) {
      for (i64 r = 0; r < i64(B) * C; ++r)
        for (int l = 0; l < L; ++l)
          dx.data[size_t(r * L + l)] += dy.data[size_t(r * 2 * L + 2 * l)] +
                                        dy.data[size_t(r * 2 * L + 2 * l + 1)];
    });
  });
}

// Feature-map pixels as attention tokens: [B,C,H,W] -> [B, H*W, C].
template <class S>
Var<S> tokens_from_map(Graph<S>& g, Var<S> x) {
  const Tensor<S>& tx = g.val(x);
  require(tx.ndim() == 4, "tokens_from_map: need [B,C,H,W]");
  const int B = tx.dim(0), C = tx.dim(1);
  const i64 sp = i64(tx.dim(2)) * tx.dim(3);
  Tensor<S> out({B, int(sp), C});
  for (int b = 0; b < B; ++b)
    Eigen::Map<MatrixRM<S>>(out.ptr() + i64(b) * sp * C, sp, C).noalias() =
        Eigen::Map<const MatrixRM<S>>(tx.ptr() + i64(b) * C * sp, C, sp)
            .transpose();
  return g.make(std::move(out), {x}, [x, B, C, sp](Graph<S>& gg, int self) {
    const Tensor<S>& dy = gg.grad(Var<S>{self});
    accum(gg, x, [&](Tensor<S>& dx) {
      for (int b = 0; b < B; ++b)
        Eigen::Map<MatrixRM<S>>(dx.ptr() + i64(b) * C * sp, C, sp)
            .noalias() +=
            Eigen::Map<const MatrixRM<S>>(dy.ptr() + i64(b) * sp * C, sp, C)
                .transpose();
    });
  });
}

// ---- loss -------------------------------------------------------------------

template <class S>
Var<S> mse(Graph<S>& g, Var<S> pred, Var<S> target) {
  const Tensor<S>& tp = g.val(pred);
  const Tensor<S>& tt = g.val(target);
  require(same_shape(tp, tt), "mse: shape mismatch");
  const i64 n = tp.numel();
  require(n > 0, "mse: empty tensors");
  Tensor<S> out({1});
  out.data[0] = S((tp.vec() - tt.vec()).squaredNorm() / double(n));
  return g.make(std::move(out), {pred, target},
                [pred, target, n](Graph<S>& gg, int self) {
                  const S dy = gg.grad(Var<S>{self}).data[0];
                  const S c = dy * S(2) / S(n);
                  accum(gg, pred, [&](Tensor<S>& dp) {
                    dp.vec() +=
                        c * (gg.val(pred).vec() - gg.val(target).vec());
                  });
                  accum(gg, target, [&](Tensor<S>& dt) {
                    dt.vec() -=
                        c * (gg.val(pred).vec() - gg.val(target).vec());
                  });
                });
}

}  // namespace pry::nn
