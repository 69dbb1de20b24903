#include "pry/data/actions.hpp"

#include <cmath>

namespace pry::data {

Pose pose_of(const sim::ToolPose& tool) {
  Pose p;
  p.position = Vec3{tool.x, 0.0, tool.z};
  const double c = std::cos(tool.theta), s = std::sin(tool.theta);
  p.rotation << c, 0, s,  //
      0, 1, 0,            //
      -s, 0, c;
  return p;
}

Vec9 delta_action(const Pose& from, const Pose& to) {
  Vec9 a;
  a.head<3>() = to.position - from.position;
  a.tail<6>() = to_rot6d(from.rotation.transpose() * to.rotation);
  return a;
}

std::vector<Vec9> compute_delta_actions(const std::vector<Pose>& poses) {
  std::vector<Vec9> out;
  if (poses.size() < 2) return out;
  out.reserve(poses.size() - 1);
  for (size_t t = 0; t + 1 < poses.size(); ++t)
    out.push_back(delta_action(poses[t], poses[t + 1]));
  return out;
}

Vec9 hold_action() {
  Vec9 a = Vec9::Zero();
  a.tail<6>() = to_rot6d(Mat3::Identity());
  return a;
}

Pose apply_action(const Pose& pose, const Vec9& action) {
  Pose out;
  out.position = pose.position + action.head<3>();
  out.rotation = pose.rotation * from_rot6d(action.tail<6>());
  return out;
}

sim::ToolAction to_tool_action(const Vec9& action) {
  const Mat3 dr = from_rot6d(action.tail<6>());
  // closest rotation about the out-of-plane axis
  const double dtheta = std::atan2(dr(0, 2) - dr(2, 0), dr(0, 0) + dr(2, 2));
  return sim::ToolAction{action(0), action(2), dtheta};
}

}  // namespace pry::data
