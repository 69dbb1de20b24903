#pragma once

#include <cmath>
#include <vector>

#include "pry/sim/scene.hpp"
#include "pry/sim/types.hpp"

namespace pry::sim {

// One active penalty contact. `normal` is the unit direction that pushes the
// TOOL out of the feature; the equal-and-opposite reaction acts on the
// feature's body (battery or casing).
struct Contact {
  Vec2 point{0, 0};        // world point on the feature surface
  Vec2 normal{0, 0};
  double depth = 0.0;      // penetration, > 0
  double stiffness = 0.0;
  bool on_battery = false;
  double battery_s = 0.0;  // feature-frame coords of the contact point
  double battery_t = 0.0;  // (only meaningful when on_battery)
  bool on_shaft = false;   // contact acts on the shaft, not the tip disc
  Vec2 shaft_point{0, 0};  // world point on the shaft centerline

  double force_magnitude() const { return stiffness * depth; }
};

// Battery pose parameterization: world = pivot + s*axis(phi) + t*up(phi)
// + (0, lift), with s measured from the pivot toward the near end and t off
// the bottom face.
struct BatteryFrame {
  Vec2 pivot{0, 0};
  double phi = 0.0;
  double lift = 0.0;

  Vec2 axis() const { return {-std::cos(phi), std::sin(phi)}; }
  Vec2 up() const { return {std::sin(phi), std::cos(phi)}; }
  Vec2 point(double s, double t) const {
    return pivot + s * axis() + t * up() + Vec2{0.0, lift};
  }
  // d(point)/d(phi), for generalized torque about the pivot
  Vec2 dpoint_dphi(double s, double t) const {
    return s * Vec2{std::sin(phi), std::cos(phi)} +
           t * Vec2{std::cos(phi), -std::sin(phi)};
  }
};

struct ToolFrame {
  Vec2 hand{0, 0};
  double theta = 0.0;
  double length = 0.0;

  Vec2 down() const { return {-std::sin(theta), -std::cos(theta)}; }
  Vec2 tip() const { return hand + length * down(); }
};

// Evaluates every tool-vs-world and tool-vs-battery contact for the given
// configuration. Pure geometry; no friction here.
std::vector<Contact> find_contacts(const ToolFrame& tool,
                                   const BatteryFrame& battery,
                                   const SceneConfig& scene,
                                   const SceneLayout& layout,
                                   const SimParams& params);

// Net generalized torque about the pivot exerted by the tool's penalty
// forces on the battery at this configuration.
double battery_torque(const std::vector<Contact>& contacts,
                      const BatteryFrame& battery);

// Net upward force on the battery from tool contacts (lift support).
double battery_support(const std::vector<Contact>& contacts);

// distance helpers (exposed for tests)
Vec2 closest_point_on_segment(const Vec2& p, const Vec2& a, const Vec2& b);

}  // namespace pry::sim
