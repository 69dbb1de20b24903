#pragma once

#include "pry/rng.hpp"
#include "pry/sim/contact.hpp"
#include "pry/sim/scene.hpp"
#include "pry/sim/types.hpp"

namespace pry::sim {

// Deterministic quasi-static prying simulator. The tool is position
// controlled; after each commanded move the battery settles into a static
// equilibrium (pivot angle against the retention spring before it is freed,
// lift height against gravity and rub afterwards). All randomness lives in
// reset(); step() is a pure function of (state, action).
class Simulator {
 public:
  explicit Simulator(SceneConfig scene, SimParams params = {});

  const SceneConfig& scene() const { return scene_; }
  const SimParams& params() const { return params_; }
  const SceneLayout& layout() const { return layout_; }

  // Start pose: hand centered over the slot, uniform in a 1 cm x 2 cm
  // (x, z) box with a small tilt jitter. The out-of-plane dimension of the
  // nominal box is frozen.
  SimState reset(u64 seed) const;
  SimState reset_at(const ToolPose& pose) const;

  // Applies actuation clamps, integrates the pose, settles the battery, and
  // returns the new state with sensed force and edge-triggered events.
  // Terminal states (Done/Failed) are absorbing: the input state is returned
  // unchanged.
  SimState step(const SimState& state, const ToolAction& action) const;

  // Instantaneous penalty contact force on the tool, in the tool frame,
  // without friction or sensor clamping. Zero when nothing touches.
  ForceSample contact_force(const SimState& state) const;

  bool is_success(const SimState& state) const;

  // Net tool torque about the pivot at (tool pose, phi, lift), gravity
  // included. The quasi-static pivot solution satisfies
  // battery_equilibrium(net_pry_torque(...)) == phi away from the clamps.
  double net_pry_torque(const ToolPose& pose, double phi, double lift) const;

  // Spring + gravity resistance torque at phi (what the tool must exceed).
  double resist_torque(double phi) const;

  ToolFrame tool_frame(const ToolPose& pose) const;
  BatteryFrame battery_frame(double phi, double lift) const;

  // Upper bound on |sensed force(t+1) - sensed force(t)| for per-step pose
  // changes of at most eps; used by the force-continuity property test.
  double force_step_bound(double eps) const;

 private:
  double solve_pivot(const ToolPose& pose, double prev_phi, double lift) const;
  double solve_lift(const ToolPose& pose, double phi, double prev_lift,
                    bool* slipped) const;

  SceneConfig scene_;
  SimParams params_;
  SceneLayout layout_;
};

}  // namespace pry::sim
