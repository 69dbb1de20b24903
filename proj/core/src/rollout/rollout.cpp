#include "pry/rollout/rollout.hpp"

#include <deque>

#include "pry/data/actions.hpp"
#include "pry/data/augment.hpp"
#include "pry/diffusion/sampler.hpp"
#include "pry/encoder/features.hpp"

namespace pry::rollout {

DiffusionPolicy::DiffusionPolicy(diffusion::PolicyModel<float>& model,
                                 const data::DatasetStats& stats,
                                 const ExperimentConfig& cfg)
    : model_(model), stats_(stats), cfg_(cfg), schedule_(cfg.diffusion) {
  cfg_.validate();
}

void DiffusionPolicy::reset(u64 seed) {
  rng_ = Rng(substream_seed(seed, "policy-sample"));
}

std::vector<data::Vec9> DiffusionPolicy::plan(
    const std::vector<const data::Observation*>& frames) {
  const int n = cfg_.model.n_obs;
  const int s = cfg_.data.crop;
  const int T = cfg_.model.horizon;
  require(int(frames.size()) == n, "diffusion policy: window size mismatch");

  nn::Tensor<float> images({n, 3, s, s});
  nn::Tensor<float> force({n, 4});
  nn::Tensor<float> poses({1, n * 9});
  for (int f = 0; f < n; ++f) {
    const data::Observation& obs = *frames[size_t(f)];
    std::vector<float> chw = data::prepare_image(obs.image, s);
    std::copy(chw.begin(), chw.end(),
              images.ptr() + i64(f) * i64(chw.size()));
    Eigen::Vector4d feat =
        encoder::featurize_force(obs.force, stats_.force_norm_constant);
    for (int i = 0; i < 4; ++i) force.data[size_t(f * 4 + i)] = float(feat(i));
    Eigen::VectorXd pose =
        stats_.poses.normalize(data::pose_vector(obs.position, obs.rotation));
    for (int i = 0; i < 9; ++i)
      poses.data[size_t(f * 9 + i)] = float(pose(i));
  }

  nn::Tensor<float> chunk = diffusion::sample_actions(
      model_, schedule_, images, force, poses, T, rng_);

  std::vector<data::Vec9> out;
  out.reserve(size_t(cfg_.model.n_action_steps));
  for (int t = 0; t < cfg_.model.n_action_steps; ++t) {
    Eigen::VectorXd a(9);
    for (int i = 0; i < 9; ++i) a(i) = double(chunk.data[size_t(i * T + t)]);
    out.push_back(stats_.actions.denormalize(a));
  }
  return out;
}

data::Observation observe(const sim::Simulator& sim, const sim::SimState& st,
                          const sim::RenderParams& render) {
  data::Observation obs;
  obs.image = sim::render(sim, st, render);
  obs.force = st.force.vec();
  const data::Pose pose = data::pose_of(st.tool);
  obs.position = pose.position;
  obs.rotation = pose.rotation;
  return obs;
}

EpisodeResult rollout(const sim::Simulator& sim, Policy& policy,
                      const sim::RenderParams& render, u64 seed) {
  EpisodeResult out;
  out.scene = sim.scene();
  out.seed = seed;

  sim::SimState st = sim.reset(seed);
  policy.reset(seed);
  ObservationWindow window(policy.n_obs());
  std::deque<data::Vec9> queue;

  while (st.phase != sim::Phase::kDone && st.phase != sim::Phase::kFailed) {
    window.push(observe(sim, st, render));
    if (queue.empty()) {
      std::vector<data::Vec9> plan = policy.plan(window.frames());
      require(!plan.empty(), "rollout: policy returned an empty plan");
      queue.assign(plan.begin(), plan.end());
    }
    const data::Vec9 action = queue.front();
    queue.pop_front();

    st = sim.step(st, data::to_tool_action(action));
    out.forces.push_back(st.force.vec());
    out.phases.push_back(static_cast<u8>(st.phase));
    out.events.push_back(st.events.bits());
    out.tool.push_back(st.tool);
  }
  out.steps = st.step_count;
  out.work_done = st.work_done;
  out.success = st.phase == sim::Phase::kDone;
  out.outcome = classify_outcome(out);
  return out;
}

std::string classify_outcome(const EpisodeResult& ep) {
  if (ep.success) return "success";
  sim::Events all;
  for (u32 bits : ep.events) {
    const sim::Events e = sim::Events::from_bits(bits);
    all.made_contact |= e.made_contact;
    all.battery_freed |= e.battery_freed;
    all.battery_slipped |= e.battery_slipped;
    all.overload |= e.overload;
    all.timeout |= e.timeout;
  }
  if (all.overload) return "overload";
  if (all.battery_slipped) return "lost_traction";
  if (!all.made_contact) return "never_engaged";
  if (!all.battery_freed) return "no_release";
  return "incomplete_lift";
}

}  // namespace pry::rollout
