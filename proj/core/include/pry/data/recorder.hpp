#pragma once

#include "pry/data/types.hpp"
#include "pry/sim/expert.hpp"
#include "pry/sim/renderer.hpp"

namespace pry::data {

// Runs the scripted expert in the given scene and records one episode.
// Observations are captured before each action; actions are the realized
// pose deltas (post actuation clamps), so replaying them reproduces the
// demonstration exactly.
Episode record_episode(const sim::SceneConfig& scene, u64 seed,
                       const sim::RenderParams& render_params,
                       const sim::SimParams& sim_params = {});

}  // namespace pry::data
