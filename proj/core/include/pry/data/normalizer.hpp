#pragma once

#include <vector>

#include <Eigen/Core>

#include "pry/common.hpp"

namespace pry::data {

// Per-dimension affine map to [-1, 1] from data min/max. Dimensions with
// zero range are degenerate: they normalize to 0 and denormalize back to
// their constant value.
class Normalizer {
 public:
  Normalizer() = default;
  Normalizer(Eigen::VectorXd min, Eigen::VectorXd max);

  static Normalizer fit(const std::vector<Eigen::VectorXd>& rows);

  Eigen::VectorXd normalize(const Eigen::VectorXd& v) const;
  Eigen::VectorXd denormalize(const Eigen::VectorXd& v) const;

  int dim() const { return static_cast<int>(min_.size()); }
  const Eigen::VectorXd& min() const { return min_; }
  const Eigen::VectorXd& max() const { return max_; }

 private:
  Eigen::VectorXd min_;
  Eigen::VectorXd max_;
};

}  // namespace pry::data
