#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pry/common.hpp"

namespace pry::sim {

using Vec2 = Eigen::Vector2d;  // planar (x, z); y is frozen at zero

// Tool pose in the casing frame: hand position (x, z) and tilt theta about
// the out-of-plane axis. theta = 0 points the tool straight down; negative
// theta leans the handle over the near wall (the prying direction).
struct ToolPose {
  double x = 0.0;
  double z = 0.0;
  double theta = 0.0;
};

// Per-step tool command. Deltas are clamped by the simulator to the
// actuation limits before integration.
struct ToolAction {
  double dx = 0.0;
  double dz = 0.0;
  double dtheta = 0.0;
};

enum class Phase : u8 {
  kFreeSpace = 0,
  kInsertContact = 1,
  kPryContact = 2,
  kLifting = 3,
  kDone = 4,
  kFailed = 5,
};

const char* phase_name(Phase p);

// Events are edge-triggered: set only on the step where they first fire.
struct Events {
  bool made_contact = false;
  bool battery_freed = false;   // pivot reached the free angle
  bool battery_slipped = false; // lost traction during lift
  bool success = false;
  bool overload = false;        // sensor saturation exceeded
  bool timeout = false;

  u32 bits() const;
  static Events from_bits(u32 bits);
};

// Force at the wrist sensor, expressed in the tool frame. fy is identically
// zero in this planar rig but kept so downstream code sees 3-vectors.
struct ForceSample {
  double fx = 0.0;
  double fy = 0.0;
  double fz = 0.0;

  Eigen::Vector3d vec() const { return {fx, fy, fz}; }
  double norm() const { return vec().norm(); }
};

struct SimState {
  ToolPose tool;
  double battery_angle = 0.0;   // pivot angle phi >= 0 about the far corner
  double battery_lift = 0.0;    // vertical translation h after freeing
  Phase phase = Phase::kFreeSpace;
  int step_count = 0;
  ForceSample force;            // sensed force from the last step
  Events events;                // events fired on the last step
  double work_done = 0.0;       // cumulative tool work on the battery
};

}  // namespace pry::sim
