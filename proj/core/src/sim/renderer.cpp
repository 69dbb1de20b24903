#include "pry/sim/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace pry::sim {
namespace {

struct Quad {
  Vec2 v[4];  // counter-clockwise
  Color color;
};

Color shade(const Color& c, double f) {
  return {std::clamp(c[0] * f, 0.0, 1.0), std::clamp(c[1] * f, 0.0, 1.0),
          std::clamp(c[2] * f, 0.0, 1.0)};
}

Quad rect(double x0, double z0, double x1, double z1, const Color& c) {
  return Quad{{Vec2{x0, z0}, Vec2{x1, z0}, Vec2{x1, z1}, Vec2{x0, z1}}, c};
}

bool inside(const Quad& q, const Vec2& p) {
  for (int i = 0; i < 4; ++i) {
    const Vec2 a = q.v[i];
    const Vec2 b = q.v[(i + 1) % 4];
    const Vec2 e = b - a;
    const Vec2 d = p - a;
    if (e.x() * d.y() - e.y() * d.x() < 0.0) return false;
  }
  return true;
}

void paint(Image8& img, const RenderParams& rp, const Quad& q) {
  double xmin = q.v[0].x(), xmax = xmin, zmin = q.v[0].y(), zmax = zmin;
  for (const Vec2& v : q.v) {
    xmin = std::min(xmin, v.x());
    xmax = std::max(xmax, v.x());
    zmin = std::min(zmin, v.y());
    zmax = std::max(zmax, v.y());
  }
  const double mx = rp.m_per_px_x(), mz = rp.m_per_px_z();
  int c0 = std::max(0, int(std::floor((xmin - rp.view_x0) / mx)));
  int c1 = std::min(rp.width - 1, int(std::ceil((xmax - rp.view_x0) / mx)));
  int r0 = std::max(0, int(std::floor((rp.view_z1 - zmax) / mz)));
  int r1 = std::min(rp.height - 1, int(std::ceil((rp.view_z1 - zmin) / mz)));
  for (int r = r0; r <= r1; ++r) {
    const double z = rp.view_z1 - (r + 0.5) * mz;
    for (int c = c0; c <= c1; ++c) {
      const double x = rp.view_x0 + (c + 0.5) * mx;
      if (inside(q, {x, z})) img.set(r, c, q.color);
    }
  }
}

}  // namespace

Image8 render(const Simulator& sim, const SimState& state,
              const RenderParams& rp) {
  const SceneConfig& scene = sim.scene();
  const SceneLayout& lay = sim.layout();
  const SceneStyle& st = scene.style;

  Image8 img(rp.height, rp.width);
  for (int r = 0; r < rp.height; ++r)
    for (int c = 0; c < rp.width; ++c) img.set(r, c, st.background_color);

  std::vector<Quad> quads;
  const double wt = lay.wall_thickness;
  const double base_z = -lay.slot_depth - 0.003;

  // casing base and the main floor shelf the battery rests on
  quads.push_back(rect(-wt, base_z, lay.pivot_x + wt, -lay.slot_depth,
                       shade(st.casing_color, 0.8)));
  quads.push_back(rect(lay.gap + lay.under_reach, -lay.slot_depth,
                       lay.pivot_x + wt, 0.0, shade(st.casing_color, 0.8)));
  // far wall
  quads.push_back(
      rect(lay.pivot_x, 0.0, lay.pivot_x + wt, lay.wall_top, st.casing_color));

  // battery body + darker terminal cap at the pried end
  {
    const BatteryFrame bf =
        sim.battery_frame(state.battery_angle, state.battery_lift);
    const double L = lay.length, H = 2.0 * lay.radius;
    // ccw: far-bottom (rightmost) -> far-top -> near-top -> near-bottom
    Quad body{{bf.point(0, 0), bf.point(0, H), bf.point(L, H), bf.point(L, 0)},
              st.battery_color};
    quads.push_back(body);
    const double cap = std::min(0.0025, 0.1 * L);
    Quad capq{{bf.point(L - cap, 0), bf.point(L - cap, H), bf.point(L, H),
               bf.point(L, 0)},
              shade(st.battery_color, 0.55)};
    quads.push_back(capq);
  }

  // retaining tab (side feature, drawn projected): shows the lip height
  quads.push_back(rect(lay.gap - 0.0005, 2.0 * lay.radius - scene.lip_height,
                       lay.gap + 0.0018, 2.0 * lay.radius + 0.0005,
                       shade(st.casing_color, 0.9)));

  // tool shaft: hand -> tip, flat color, constant width
  {
    const ToolFrame tf = sim.tool_frame(state.tool);
    const Vec2 tip = tf.tip();
    const Vec2 axis = (tip - tf.hand).normalized();
    const Vec2 perp{-axis.y(), axis.x()};
    const double hw = sim.params().shaft_half_width;
    const Color tool_color{0.22, 0.24, 0.30};
    Quad shaft{{tip + hw * perp, tf.hand + hw * perp, tf.hand - hw * perp,
                tip - hw * perp},
               tool_color};
    quads.push_back(shaft);
  }

  // near casing wall, extended across the slot column: occludes the tool
  // inside the slot. The outer edge slants by the style angle.
  {
    const double top = lay.wall_top;
    const double slant = std::tan(st.slant_angle) * (top - base_z);
    Quad cover{{Vec2{-wt - slant, top}, Vec2{-wt, base_z}, Vec2{lay.gap, base_z},
                Vec2{lay.gap, top}},
               st.casing_color};
    quads.push_back(cover);
  }

  for (const Quad& q : quads) paint(img, rp, q);
  return img;
}

}  // namespace pry::sim
