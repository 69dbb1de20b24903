#pragma once

#include <Eigen/Core>

namespace pry::encoder {

// Force enters the network as four parameters: normalized magnitude plus
// the unit direction. Splitting magnitude from direction keeps small but
// directionally crisp contact forces from vanishing after normalization.
inline Eigen::Vector4d featurize_force(const Eigen::Vector3d& force_newtons,
                                       double norm_constant) {
  const double mag = force_newtons.norm();
  Eigen::Vector4d out = Eigen::Vector4d::Zero();
  out(0) = mag / norm_constant;
  if (mag > 1e-9) out.tail<3>() = force_newtons / mag;
  return out;
}

}  // namespace pry::encoder
