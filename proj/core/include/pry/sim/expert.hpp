#pragma once

#include <vector>

#include "pry/rng.hpp"
#include "pry/sim/simulator.hpp"

namespace pry::sim {

// Scripted demonstrator. Plans in tip space, converts to hand commands, and
// switches phases on force and simulator events:
//   approach (one of two path families) -> align -> insert until the tip
//   bottoms out on the slot liner (force trigger) -> pry by ramping the tilt
//   while holding hand height, which arcs the tip up under the battery's
//   near edge -> lift once the battery is freed.
class Expert {
 public:
  // Per-episode style parameters, sampled from the seed.
  struct Params {
    bool lateral_first = false;    // approach family
    double insert_tilt = 0.0;      // tilt held during insertion
    double insert_trigger = 0.8;   // |f| that signals bottoming, N
    double pry_rate = 0.02;        // tilt ramp, rad per step
    double max_pry_tilt = 0.50;    // magnitude cap
    double approach_speed = 1.0;   // fraction of the translation clamp
    double insert_speed = 0.0015;  // descent per step inside the slot, m
    double lift_speed = 0.0025;    // hand rise per step, m
    double jitter = 0.0002;        // waypoint noise during free motion, m
  };

  Expert(const Simulator& sim, u64 seed);

  ToolAction act(const SimState& state);

  const Params& params() const { return params_; }

  enum class Mode { kApproach, kAlign, kInsert, kPry, kLift, kHold };
  Mode mode() const { return mode_; }

 private:
  Vec2 tip_of(const ToolPose& pose) const;
  ToolAction toward(const SimState& state, const Vec2& tip_target,
                    double tilt_target, double speed, bool jitter);

  const Simulator& sim_;
  Params params_;
  Rng rng_;
  Mode mode_ = Mode::kApproach;
  std::vector<Vec2> waypoints_;  // tip-space approach waypoints
  size_t waypoint_idx_ = 0;
};

}  // namespace pry::sim
