#include "pry/sim/expert.hpp"

#include <algorithm>
#include <cmath>

namespace pry::sim {
namespace {

double clamp_mag(double v, double mag) { return std::clamp(v, -mag, mag); }

}  // namespace

Expert::Expert(const Simulator& sim, u64 seed)
    : sim_(sim), rng_(substream_seed(seed, "expert")) {
  params_.lateral_first = rng_.uniform() < 0.5;
  params_.insert_tilt = rng_.uniform(-0.05, 0.0);
  params_.insert_trigger = rng_.uniform(0.6, 1.0);
  params_.pry_rate = rng_.uniform(0.018, 0.024);
  params_.approach_speed = rng_.uniform(0.75, 0.95);
  params_.lift_speed = rng_.uniform(0.0022, 0.0028);

  const SceneLayout& lay = sim.layout();
  const double slot_mid = 0.5 * lay.gap;
  const double hover_z = lay.wall_top + 0.003;
  if (params_.lateral_first) {
    // swing out over the wall first, then come down onto the slot from the
    // side: a distinct homotopy class from the straight descent
    waypoints_.push_back({slot_mid - 0.009, hover_z + 0.012});
    waypoints_.push_back({slot_mid, hover_z + 0.004});
  }
  waypoints_.push_back({slot_mid, hover_z});
}

Vec2 Expert::tip_of(const ToolPose& pose) const {
  return sim_.tool_frame(pose).tip();
}

ToolAction Expert::toward(const SimState& state, const Vec2& tip_target,
                          double tilt_target, double speed, bool jitter) {
  const ToolPose& pose = state.tool;
  const SimParams& sp = sim_.params();
  const double dtheta =
      clamp_mag(tilt_target - pose.theta, sp.max_step_rotation * 0.8);
  const double theta_new = pose.theta + dtheta;
  // hand target that puts the tip at tip_target once the tilt settles
  const double hand_x =
      tip_target.x() + sp.tool_length * std::sin(theta_new);
  const double hand_z =
      tip_target.y() + sp.tool_length * std::cos(theta_new);
  double dx = hand_x - pose.x;
  double dz = hand_z - pose.z;
  if (jitter) {
    dx += rng_.uniform(-params_.jitter, params_.jitter);
    dz += rng_.uniform(-params_.jitter, params_.jitter);
  }
  const double cap = sp.max_step_translation * speed;
  const double n = std::hypot(dx, dz);
  if (n > cap) {
    dx *= cap / n;
    dz *= cap / n;
  }
  return ToolAction{dx, dz, dtheta};
}

ToolAction Expert::act(const SimState& state) {
  const SceneLayout& lay = sim_.layout();
  const SimParams& sp = sim_.params();
  const ToolPose& pose = state.tool;
  const Vec2 tip = tip_of(pose);
  const double slot_mid = 0.5 * lay.gap;

  switch (mode_) {
    case Mode::kApproach: {
      const Vec2 target = waypoints_[waypoint_idx_];
      if ((tip - target).norm() < 0.0012) {
        if (waypoint_idx_ + 1 < waypoints_.size()) {
          ++waypoint_idx_;
        } else {
          mode_ = Mode::kAlign;
        }
      }
      return toward(state, waypoints_[waypoint_idx_], params_.insert_tilt,
                    params_.approach_speed, true);
    }
    case Mode::kAlign: {
      const Vec2 target{slot_mid, lay.wall_top + 0.0015};
      if ((tip - target).norm() < 0.0008 &&
          std::abs(pose.theta - params_.insert_tilt) < 0.01)
        mode_ = Mode::kInsert;
      return toward(state, target, params_.insert_tilt, 0.5, false);
    }
    case Mode::kInsert: {
      // bottoming out reads as axial force; lateral wall rubs stay in fx
      if (std::abs(state.force.fz) >= params_.insert_trigger &&
          state.phase != Phase::kFreeSpace) {
        mode_ = Mode::kPry;
        return act(state);
      }
      const Vec2 target{slot_mid, tip.y() - params_.insert_speed};
      return toward(state, target, params_.insert_tilt, 0.35, false);
    }
    case Mode::kPry: {
      if (state.phase == Phase::kLifting || state.events.battery_freed) {
        mode_ = Mode::kLift;
        return act(state);
      }
      // ramp the tilt negative (handle over the wall); hold hand height so
      // the tip arcs up and under the battery edge; track x so the tip stays
      // beneath the overhang
      const double theta_target =
          std::max(pose.theta - params_.pry_rate, -params_.max_pry_tilt);
      const double dtheta = clamp_mag(theta_target - pose.theta,
                                      sp.max_step_rotation * 0.8);
      const double theta_new = pose.theta + dtheta;
      // middle of the overhang: clear of the recess step and of the battery
      // end face, which leans over the slot as the battery pivots
      const double tip_x_target = lay.gap + 0.5 * lay.under_reach;
      double dx =
          tip_x_target + sp.tool_length * std::sin(theta_new) - pose.x;
      const double cap = sp.max_step_translation * 0.9;
      dx = clamp_mag(dx, cap);
      return ToolAction{dx, 0.0, dtheta};
    }
    case Mode::kLift: {
      if (state.phase == Phase::kDone) {
        mode_ = Mode::kHold;
        return ToolAction{};
      }
      return ToolAction{0.0, params_.lift_speed, 0.0};
    }
    case Mode::kHold:
      return ToolAction{};
  }
  return ToolAction{};
}

}  // namespace pry::sim
