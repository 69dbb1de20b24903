#include "pry/rollout/window.hpp"

#include "pry/common.hpp"

namespace pry::rollout {

ObservationWindow::ObservationWindow(int n_obs) : n_obs_(n_obs) {
  require(n_obs >= 1, "observation window: n_obs must be >= 1");
}

void ObservationWindow::push(data::Observation obs) {
  buf_.push_back(std::move(obs));
  while (int(buf_.size()) > n_obs_) buf_.pop_front();
}

std::vector<const data::Observation*> ObservationWindow::frames() const {
  require(!buf_.empty(), "observation window: no frames pushed");
  std::vector<const data::Observation*> out;
  out.reserve(size_t(n_obs_));
  for (int i = int(buf_.size()); i < n_obs_; ++i) out.push_back(&buf_.front());
  for (const data::Observation& o : buf_) out.push_back(&o);
  return out;
}

}  // namespace pry::rollout
