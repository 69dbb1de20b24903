#include "pry/data/rotation6d.hpp"

#include <Eigen/Geometry>  // defines MatrixBase::cross

#include "pry/common.hpp"

namespace pry::data {

Vec6 to_rot6d(const Eigen::Matrix3d& rotation) {
  Vec6 out;
  out << rotation.col(0), rotation.col(1);
  return out;
}

Eigen::Matrix3d from_rot6d(const Vec6& r6) {
  const Eigen::Vector3d a1 = r6.head<3>();
  const Eigen::Vector3d a2 = r6.tail<3>();
  const double n1 = a1.norm();
  require(n1 > 1e-8, "from_rot6d: degenerate first vector");
  const Eigen::Vector3d b1 = a1 / n1;
  Eigen::Vector3d v2 = a2 - b1.dot(a2) * b1;
  const double n2 = v2.norm();
  require(n2 > 1e-8, "from_rot6d: degenerate second vector");
  const Eigen::Vector3d b2 = v2 / n2;
  Eigen::Matrix3d out;
  out.col(0) = b1;
  out.col(1) = b2;
  out.col(2) = b1.cross(b2);
  return out;
}

}  // namespace pry::data
