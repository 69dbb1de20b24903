#pragma once

#include "pry/image.hpp"
#include "pry/sim/simulator.hpp"

namespace pry::sim {

// Side-on orthographic camera. The window is fixed across scenes so pixel
// coordinates are comparable between episodes.
struct RenderParams {
  int height = 64;
  int width = 64;
  double view_x0 = -0.025;
  double view_x1 = 0.095;
  double view_z0 = -0.030;
  double view_z1 = 0.090;

  double m_per_px_x() const { return (view_x1 - view_x0) / width; }
  double m_per_px_z() const { return (view_z1 - view_z0) / height; }
};

// Deterministic flat-shaded render. The near casing wall is drawn last and
// extended over the slot column, so the tool below the wall top is occluded:
// insertion depth is not observable from pixels, only from force.
Image8 render(const Simulator& sim, const SimState& state,
              const RenderParams& params);

}  // namespace pry::sim
