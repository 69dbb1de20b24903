#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pry/data/dataset.hpp"
#include "pry/diffusion/policy.hpp"
#include "pry/diffusion/schedule.hpp"
#include "pry/rollout/window.hpp"
#include "pry/sim/renderer.hpp"

namespace pry::rollout {

// Everything the evaluation suite and the force reports need from one
// closed-loop episode.
struct EpisodeResult {
  sim::SceneConfig scene;
  u64 seed = 0;
  bool success = false;
  std::string outcome;
  int steps = 0;
  double work_done = 0.0;
  std::vector<Eigen::Vector3d> forces;   // sensed, tool frame, per step
  std::vector<u8> phases;                // phase after each step
  std::vector<u32> events;               // edge-triggered bits per step
  std::vector<sim::ToolPose> tool;       // pose after each step
};

// Observation-driven policy. plan() is called whenever the executed queue
// runs dry and must return at least one world-frame action.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void reset(u64 seed) = 0;
  virtual int n_obs() const = 0;
  virtual std::vector<data::Vec9> plan(
      const std::vector<const data::Observation*>& frames) = 0;
};

// Receding-horizon diffusion policy: samples a horizon-length chunk and
// hands back the first n_action_steps actions. All sampling noise derives
// from the rollout seed, so (weights, scene, seed) fixes the episode.
class DiffusionPolicy : public Policy {
 public:
  DiffusionPolicy(diffusion::PolicyModel<float>& model,
                  const data::DatasetStats& stats,
                  const ExperimentConfig& cfg);

  void reset(u64 seed) override;
  int n_obs() const override { return cfg_.model.n_obs; }
  std::vector<data::Vec9> plan(
      const std::vector<const data::Observation*>& frames) override;

 private:
  diffusion::PolicyModel<float>& model_;
  const data::DatasetStats& stats_;
  ExperimentConfig cfg_;
  diffusion::Schedule schedule_;
  Rng rng_{0};
};

// Runs one closed-loop episode: every step pushes a fresh observation into
// the window; the policy replans when its action queue is exhausted.
EpisodeResult rollout(const sim::Simulator& sim, Policy& policy,
                      const sim::RenderParams& render, u64 seed);

// Renders the policy-facing observation for the current state.
data::Observation observe(const sim::Simulator& sim, const sim::SimState& st,
                          const sim::RenderParams& render);

// Total, priority-ordered failure taxonomy; "success" for successes.
std::string classify_outcome(const EpisodeResult& ep);

}  // namespace pry::rollout
