#pragma once

#include <deque>
#include <vector>

#include "pry/data/types.hpp"

namespace pry::rollout {

// Last n_obs observations, oldest first. Until n_obs frames have been seen
// the earliest frame is repeated, matching the dataset's window padding.
class ObservationWindow {
 public:
  explicit ObservationWindow(int n_obs);

  void push(data::Observation obs);
  void clear() { buf_.clear(); }
  bool empty() const { return buf_.empty(); }

  // Requires at least one pushed frame.
  std::vector<const data::Observation*> frames() const;

 private:
  int n_obs_;
  std::deque<data::Observation> buf_;
};

}  // namespace pry::rollout
