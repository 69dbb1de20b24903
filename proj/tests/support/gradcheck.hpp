#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "pry/nn/graph.hpp"
#include "pry/rng.hpp"

namespace pry::testing {

// Central-difference gradient check against the tape. `eval(true)` must
// rebuild the graph from current parameter values, run backward, and leave
// gradients accumulated in the store; `eval(false)` just returns the loss.
struct FdReport {
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;
  int checked = 0;
};

// h balances truncation against cancellation in (lp - lm): losses here are
// sums of hundreds of terms, so the difference loses ~1e-13 absolute and a
// too-small step amplifies that into the quotient.
inline FdReport fd_check(nn::ParamStore<double>& ps,
                         const std::function<double(bool)>& eval,
                         int stride = 1, double h = 1e-4) {
  ps.zero_grad();
  eval(true);
  FdReport rep;
  for (nn::Param<double>* p : ps.all()) {
    for (i64 i = 0; i < p->value.numel(); i += stride) {
      const double saved = p->value.data[size_t(i)];
      const double step = h * std::max(1.0, std::abs(saved));
      p->value.data[size_t(i)] = saved + step;
      const double lp = eval(false);
      p->value.data[size_t(i)] = saved - step;
      const double lm = eval(false);
      p->value.data[size_t(i)] = saved;
      const double fd = (lp - lm) / (2.0 * step);
      const double an = p->grad.data[size_t(i)];
      const double abs_err = std::abs(fd - an);
      const double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
      rep.max_abs_err = std::max(rep.max_abs_err, abs_err);
      rep.max_rel_err = std::max(rep.max_rel_err, abs_err / denom);
      ++rep.checked;
    }
  }
  return rep;
}

inline void fill_normal(Rng& rng, nn::Tensor<double>& t, double scale = 1.0) {
  for (double& x : t.data) x = scale * rng.normal();
}

inline nn::Param<double>& add_normal(nn::ParamStore<double>& ps, Rng& rng,
                                     const std::string& name,
                                     std::vector<int> shape,
                                     double scale = 1.0) {
  nn::Param<double>& p = ps.add(name, std::move(shape));
  fill_normal(rng, p.value, scale);
  return p;
}

}  // namespace pry::testing
