#pragma once

#include <vector>

#include "pry/data/rotation6d.hpp"
#include "pry/data/types.hpp"
#include "pry/sim/types.hpp"

namespace pry::data {

struct Pose {
  Vec3 position = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
};

Pose pose_of(const sim::ToolPose& tool);

// Action = [world-frame translation delta (3); rot6d of R_t^T R_{t+1} (6)].
// N poses produce N-1 actions.
std::vector<Vec9> compute_delta_actions(const std::vector<Pose>& poses);

Vec9 delta_action(const Pose& from, const Pose& to);

// The action that holds the pose: zero translation, identity rotation.
Vec9 hold_action();

// Applies an action to a pose (the inverse of delta_action).
Pose apply_action(const Pose& pose, const Vec9& action);

// Projects a 9-dim action onto the planar tool command (dx, dz, dtheta
// about the out-of-plane axis). Off-plane components are dropped; the
// simulator applies its own actuation clamps.
sim::ToolAction to_tool_action(const Vec9& action);

}  // namespace pry::data
