#include "pry/data/recorder.hpp"

#include "pry/data/actions.hpp"

namespace pry::data {

Episode record_episode(const sim::SceneConfig& scene, u64 seed,
                       const sim::RenderParams& render_params,
                       const sim::SimParams& sim_params) {
  sim::Simulator sim(scene, sim_params);
  sim::Expert expert(sim, seed);

  Episode ep;
  ep.scene = scene;
  ep.seed = seed;

  sim::SimState state = sim.reset(seed);
  while (state.phase != sim::Phase::kDone &&
         state.phase != sim::Phase::kFailed) {
    EpisodeStep step;
    step.obs.image = sim::render(sim, state, render_params);
    step.obs.force = state.force.vec();
    const Pose pose = pose_of(state.tool);
    step.obs.position = pose.position;
    step.obs.rotation = pose.rotation;

    const sim::ToolAction cmd = expert.act(state);
    const sim::SimState after = sim.step(state, cmd);

    step.action = delta_action(pose, pose_of(after.tool));
    step.phase = static_cast<u8>(after.phase);
    step.event_bits = after.events.bits();
    ep.steps.push_back(std::move(step));
    state = after;
  }
  ep.success = state.phase == sim::Phase::kDone;
  ep.outcome = sim::phase_name(state.phase);
  return ep;
}

}  // namespace pry::data
