#pragma once

#include <array>
#include <string>

#include "pry/common.hpp"
#include "pry/image.hpp"
#include "pry/rng.hpp"

namespace pry::sim {

// Rendering style knobs; these only affect pixels, never physics.
struct SceneStyle {
  Color casing_color{0.55, 0.55, 0.58};
  Color battery_color{0.35, 0.75, 0.35};
  Color background_color{0.92, 0.92, 0.90};
  double slant_angle = 0.2;  // outward slant of the near casing wall, rad
};

// One battery-compartment instance. Lengths in meters, forces in newtons.
// Geometry: the near casing wall occupies x <= 0, the battery (a cylinder
// seen side-on as a rectangle of length battery_length and height
// 2*battery_radius) is seated at x in [gap_width, gap_width+battery_length],
// z in [0, 2*battery_radius]. The pry slot is the gap between wall and
// battery; its floor is recessed below z = 0 and reaches under the battery's
// near end, which is what gives a thin tool something to lever against.
struct SceneConfig {
  double battery_length = 0.046;
  double battery_radius = 0.007;
  double gap_width = 0.0045;
  double casing_depth = 0.012;      // wall top height above the main floor
  double lip_height = 0.0035;       // retaining tab height the end must clear
  double spring_stiffness = 1200.0; // axial spring, N/m
  double spring_preload = 13.0;     // seated axial preload, N
  double traction_threshold = 1.0;  // min normal force that can carry the battery
  double contact_stiffness = 20000.0;  // penalty stiffness, N/m
  double friction_coeff = 0.3;
  SceneStyle style;
  std::string object_id = "default";

  // Throws Error with the violated bound in the message.
  void validate() const;
};

// Fixed rig constants shared by every scene. These are part of the physics
// contract, not per-scene randomization.
struct SimParams {
  double tool_length = 0.080;       // hand to tip center
  double tip_radius = 0.0010;      // tip disc radius
  double shaft_half_width = 0.0008;  // thin spudger; must pass the pry slot
  double max_step_translation = 0.005;   // per-step clamp, m
  double max_step_rotation = 0.05235987755982988;  // 3 deg in rad
  double force_saturation = 50.0;   // sensor clamp and overload threshold, N
  int max_steps = 150;
  double floor_stiffness_frac = 0.05;   // slot liner is softer than casing
  double shaft_stiffness_frac = 0.15;   // casing edge + shaft flex
  double recess_frac = 0.42;        // slot floor depth, fraction of radius
  double under_reach_frac = 0.70;   // slot floor reach under battery, frac of gap
  double lip_clearance = 0.0005;    // extra rise needed beyond lip_height
  double success_height_frac = 1.5; // battery_lift >= frac * radius => success
  double battery_density = 3000.0;  // effective kg/m^3 (cells + internals)
  double gravity = 9.81;
  double residual_spring_frac = 0.5;  // axial load that keeps rubbing in lift
  double slip_per_step = 0.002;     // battery drop rate when unsupported, m
  double pivot_fall_per_step = 0.004;  // settle-back rate when unsupported, rad
  double casing_depth_min = 0.006;  // validation bounds for casing_depth
  double casing_depth_max = 0.030;
};

// Quantities derived from (SceneConfig, SimParams) that the simulator,
// renderer, and expert all need. Computed once per scene.
struct SceneLayout {
  double gap = 0.0;            // G
  double length = 0.0;         // L
  double radius = 0.0;         // r
  double wall_top = 0.0;       // z of near/far wall top
  double wall_thickness = 0.005;
  double slot_depth = 0.0;     // recess below z=0
  double under_reach = 0.0;    // slot floor extent past x = G
  double pivot_x = 0.0;        // far bottom corner (pivot_x, 0)
  double free_angle = 0.0;     // phi_free: near end clears the lip
  double max_angle = 0.0;      // solver clamp, slightly past free_angle
  double spring_torque_preload = 0.0;  // tau_pre = preload * r
  double spring_torque_stiffness = 0.0;  // k_phi = k_s * r^2
  double battery_weight = 0.0;
  double lift_drag = 0.0;      // friction from the residual axial load
  double lift_load = 0.0;      // weight + lift_drag
  double success_height = 0.0;
};

SceneLayout derive_layout(const SceneConfig& scene, const SimParams& params);

// Battery pivot equilibrium: given the net tool torque about the pivot,
// returns the pivot angle where the retention spring balances it:
//   phi = clamp((tau - tau_pre) / k_phi, 0, max_angle).
double battery_equilibrium(double tool_torque, const SceneLayout& layout);

// ---- scene sampling -------------------------------------------------------

// Half-open parameter ranges for one randomization cell.
struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double sample(Rng& rng) const { return rng.uniform(lo, hi); }
};

struct SceneDistribution {
  Range battery_length{0.040, 0.052};
  Range battery_radius{0.0055, 0.0080};
  Range gap_width{0.0035, 0.0055};
  Range casing_depth_rel{1.4, 2.2};   // multiple of battery_radius
  Range lip_height{0.0025, 0.0042};
  Range spring_stiffness{900.0, 1500.0};
  Range spring_preload{10.0, 16.0};
  Range traction_frac{0.30, 0.50};    // fraction of lift_load
  Range contact_stiffness{15000.0, 25000.0};
  Range friction_coeff{0.20, 0.40};
  Range battery_hue{0.25, 0.45};      // hue band for the battery fill
  Range casing_shade{0.45, 0.65};
  Range slant_angle{0.05, 0.40};
};

SceneConfig sample_scene(Rng& rng, const SceneDistribution& dist,
                         const SimParams& params,
                         const std::string& object_id);

// JSON round-trip for configs and suites.
SceneConfig scene_from_json(const std::string& json_text);
std::string scene_to_json(const SceneConfig& scene);

}  // namespace pry::sim
