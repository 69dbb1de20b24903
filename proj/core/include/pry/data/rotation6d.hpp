#pragma once

#include <Eigen/Core>

namespace pry::data {

using Vec6 = Eigen::Matrix<double, 6, 1>;

// Continuous 6D rotation representation: the first two columns of R.
Vec6 to_rot6d(const Eigen::Matrix3d& rotation);

// Gram-Schmidt recovery: b1 = normalize(a1), b2 = normalize(a2 - <b1,a2>b1),
// b3 = b1 x b2. Valid for any input whose first two vectors are not
// degenerate, so small regression noise stays safe.
Eigen::Matrix3d from_rot6d(const Vec6& r6);

}  // namespace pry::data
