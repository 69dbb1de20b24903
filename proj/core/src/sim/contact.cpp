#include "pry/sim/contact.hpp"

#include <algorithm>
#include <cmath>

namespace pry::sim {
namespace {

// Disc (center c, radius rho) against a segment. Adds a contact when the
// disc overlaps; the normal points from the closest feature point toward the
// disc center, so it is valid from either side of thin features. Used for
// the battery faces, where the pivot/lift continuation solvers keep the disc
// from ever crossing a face.
void disc_vs_segment(const Vec2& c, double rho, const Vec2& a, const Vec2& b,
                     double stiffness, std::vector<Contact>& out) {
  const Vec2 q = closest_point_on_segment(c, a, b);
  const Vec2 d = c - q;
  const double dist = d.norm();
  if (dist >= rho || dist < 1e-12) return;
  Contact k;
  k.point = q;
  k.normal = d / dist;
  k.depth = rho - dist;
  k.stiffness = stiffness;
  out.push_back(k);
}

// Disc against a face of the solid casing: the side opposite `n_out` is
// filled material, so the penalty keeps growing however deep the disc is
// driven (no tunneling; pressing hard ends in sensor overload instead).
// Outside the segment span this degrades to the two-sided endpoint contact,
// which is the correct behavior at convex corners.
void disc_vs_solid(const Vec2& c, double rho, const Vec2& a, const Vec2& b,
                   const Vec2& n_out, double stiffness,
                   std::vector<Contact>& out) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? (c - a).dot(ab) / len2 : 0.0;
  if (t <= 0.0 || t >= 1.0) {
    disc_vs_segment(c, rho, a, b, stiffness, out);
    return;
  }
  const double signed_dist = (c - a).dot(n_out);
  if (signed_dist >= rho) return;
  Contact k;
  k.point = c - signed_dist * n_out;
  k.normal = n_out;
  k.depth = rho - signed_dist;
  k.stiffness = stiffness;
  out.push_back(k);
}

// Shaft centerline (segment) against a corner point, with a half-width
// collision envelope. The corner pushes the shaft back along the
// perpendicular from the corner to the centerline.
void shaft_vs_corner(const Vec2& a, const Vec2& b, double half_width,
                     const Vec2& corner, double stiffness,
                     std::vector<Contact>& out) {
  const Vec2 q = closest_point_on_segment(corner, a, b);
  const Vec2 d = q - corner;
  const double dist = d.norm();
  if (dist >= half_width || dist < 1e-12) return;
  Contact k;
  k.point = corner;
  k.normal = d / dist;
  k.depth = half_width - dist;
  k.stiffness = stiffness;
  k.on_shaft = true;
  k.shaft_point = q;
  out.push_back(k);
}

}  // namespace

Vec2 closest_point_on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return a;
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return a + t * ab;
}

std::vector<Contact> find_contacts(const ToolFrame& tool,
                                   const BatteryFrame& battery,
                                   const SceneConfig& scene,
                                   const SceneLayout& layout,
                                   const SimParams& params) {
  std::vector<Contact> out;
  const Vec2 tip = tool.tip();
  const double rho = params.tip_radius;
  const double k_c = scene.contact_stiffness;
  const double k_floor = params.floor_stiffness_frac * k_c;
  const double k_shaft = params.shaft_stiffness_frac * k_c;

  // --- static casing features vs the tip disc ---
  const double wt = layout.wall_thickness;
  const Vec2 wall_in_lo{0.0, -layout.slot_depth};
  const Vec2 wall_in_hi{0.0, layout.wall_top};
  const Vec2 wall_top_out{-wt, layout.wall_top};
  const Vec2 floor_lo{0.0, -layout.slot_depth};
  const Vec2 floor_hi{layout.gap + layout.under_reach, -layout.slot_depth};
  const Vec2 step_lo = floor_hi;
  const Vec2 step_hi{layout.gap + layout.under_reach, 0.0};

  disc_vs_solid(tip, rho, wall_in_lo, wall_in_hi, {1.0, 0.0}, k_c, out);
  disc_vs_solid(tip, rho, wall_top_out, wall_in_hi, {0.0, 1.0}, k_c, out);
  disc_vs_solid(tip, rho, floor_lo, floor_hi, {0.0, 1.0}, k_floor, out);
  disc_vs_solid(tip, rho, step_lo, step_hi, {-1.0, 0.0}, k_c, out);
  // far casing wall (right of the battery); rarely reachable but keeps the
  // arena closed
  const Vec2 far_lo{layout.pivot_x, 0.0};
  const Vec2 far_hi{layout.pivot_x + wt, layout.wall_top};
  disc_vs_solid(tip, rho, far_lo, {far_lo.x(), layout.wall_top}, {-1.0, 0.0},
                k_c, out);
  disc_vs_solid(tip, rho, {far_lo.x(), layout.wall_top}, far_hi, {0.0, 1.0},
                k_c, out);

  // --- battery faces vs the tip disc ---
  const double L = layout.length;
  const double H = 2.0 * layout.radius;
  struct Face {
    Vec2 a_st;  // (s, t) endpoints in the battery frame
    Vec2 b_st;
  };
  const Face faces[] = {
      {{0.0, 0.0}, {L, 0.0}},   // bottom (the pry target)
      {{L, 0.0}, {L, H}},       // near end
      {{0.0, H}, {L, H}},       // top
  };
  for (const Face& f : faces) {
    const Vec2 a = battery.point(f.a_st.x(), f.a_st.y());
    const Vec2 b = battery.point(f.b_st.x(), f.b_st.y());
    const size_t before = out.size();
    disc_vs_segment(tip, rho, a, b, k_c, out);
    for (size_t i = before; i < out.size(); ++i) {
      Contact& k = out[i];
      k.on_battery = true;
      // recover (s, t) of the contact point for torque arms
      const Vec2 rel = k.point - battery.pivot - Vec2{0.0, battery.lift};
      k.battery_s = rel.dot(battery.axis());
      k.battery_t = rel.dot(battery.up());
    }
  }

  // --- shaft vs salient corners ---
  const double hw = params.shaft_half_width;
  shaft_vs_corner(tool.hand, tip, hw, wall_in_hi, k_shaft, out);
  shaft_vs_corner(tool.hand, tip, hw, wall_top_out, k_shaft, out);
  {
    const size_t before = out.size();
    const Vec2 near_top = battery.point(L, H);
    shaft_vs_corner(tool.hand, tip, hw, near_top, k_shaft, out);
    for (size_t i = before; i < out.size(); ++i) {
      out[i].on_battery = true;
      out[i].battery_s = L;
      out[i].battery_t = H;
    }
  }
  return out;
}

double battery_torque(const std::vector<Contact>& contacts,
                      const BatteryFrame& battery) {
  double torque = 0.0;
  for (const Contact& k : contacts) {
    if (!k.on_battery) continue;
    // reaction on the battery is -F_tool
    const Vec2 f_battery = -k.force_magnitude() * k.normal;
    torque += f_battery.dot(battery.dpoint_dphi(k.battery_s, k.battery_t));
  }
  return torque;
}

double battery_support(const std::vector<Contact>& contacts) {
  double up = 0.0;
  for (const Contact& k : contacts) {
    if (!k.on_battery) continue;
    up += -k.force_magnitude() * k.normal.y();
  }
  return up;
}

}  // namespace pry::sim
