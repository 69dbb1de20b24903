#include "pry/diffusion/trainer.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "pry/data/augment.hpp"
#include "pry/encoder/features.hpp"
#include "pry/nn/ops.hpp"

namespace pry::diffusion {

using data::WindowRef;

struct Trainer::Batch {
  nn::Tensor<float> images, force, poses, noisy, target;
  std::vector<int> steps;
  std::vector<WindowRef> refs;
};

Trainer::Trainer(const ExperimentConfig& cfg, Variant variant,
                 const data::Dataset& dataset, std::string run_dir)
    : cfg_(cfg),
      variant_(variant),
      dataset_(dataset),
      run_dir_(std::move(run_dir)),
      schedule_(cfg.diffusion) {
  cfg_.validate();
  require(dataset_.total_steps() > 0, "trainer: empty dataset");
  model_ = std::make_unique<PolicyModel<float>>(
      cfg_, variant_,
      substream_seed(cfg_.train.seed, "model-init", u64(variant_)));
  opt_ = std::make_unique<nn::AdamW<float>>(
      model_->params.all(), cfg_.train.lr, cfg_.train.weight_decay);
  ema_ = std::make_unique<nn::Ema<float>>(model_->params.all(),
                                          cfg_.train.ema_decay);
  total_steps_ = planned_total_steps();
  std::filesystem::create_directories(run_dir_);
}

Trainer::~Trainer() = default;

std::string Trainer::checkpoint_path() const {
  return run_dir_ + "/checkpoint.bin";
}

void Trainer::resume_from(const std::string& checkpoint_path) {
  CheckpointMeta meta =
      resume_checkpoint<float>(checkpoint_path, *model_, *opt_, *ema_, cfg_);
  epochs_done_ = meta.epochs_done;
  global_step_ = meta.global_step;
}

void Trainer::save(const std::string& path) const {
  CheckpointMeta meta;
  meta.epochs_done = epochs_done_;
  meta.global_step = global_step_;
  save_checkpoint<float>(path, *model_, *opt_, *ema_, meta, cfg_,
                         dataset_.stats());
}

i64 Trainer::planned_total_steps() const {
  const int stride = cfg_.train.window_stride;
  const i64 batch = cfg_.train.batch_size;
  i64 total = 0;
  for (int e = 0; e < cfg_.train.epochs; ++e) {
    i64 n = i64(dataset_.window_refs(stride, e % stride).size());
    total += (n + batch - 1) / batch;
  }
  return total;
}

void Trainer::assemble(const std::vector<WindowRef>& refs, size_t begin,
                       size_t end, const std::vector<double>& episode_scale,
                       Rng& aug, Batch& out) const {
  const int B = int(end - begin);
  const int n = cfg_.model.n_obs;
  const int s = cfg_.data.crop;
  const int T = cfg_.model.horizon;
  const data::DatasetStats& stats = dataset_.stats();

  out.images = nn::Tensor<float>({B * n, 3, s, s});
  out.force = nn::Tensor<float>({B * n, 4});
  out.poses = nn::Tensor<float>({B, n * 9});
  out.noisy = nn::Tensor<float>({B, 9, T});
  out.target = nn::Tensor<float>({B, 9, T});
  out.steps.assign(size_t(B), 0);
  out.refs.assign(refs.begin() + i64(begin), refs.begin() + i64(end));

  for (int b = 0; b < B; ++b) {
    const WindowRef& ref = refs[begin + size_t(b)];
    data::WindowData wd = dataset_.window(ref, n, T);

    // Consumption order per window is fixed: jitter, per-frame force noise,
    // diffusion step, then the noise tensor.
    data::Jitter jit = data::sample_jitter(aug, cfg_.data.image_aug,
                                           dataset_.render_params().height, s);
    for (int f = 0; f < n; ++f) {
      const data::Observation& obs = *wd.frames[size_t(f)];
      std::vector<float> chw = data::augment_image(obs.image, jit, s);
      std::copy(chw.begin(), chw.end(),
                out.images.ptr() + i64(b * n + f) * i64(chw.size()));

      Eigen::Vector3d fn = obs.force / stats.force_norm_constant;
      fn = data::augment_force(fn, episode_scale[size_t(ref.episode)], aug,
                               cfg_.data.force_aug);
      Eigen::Vector4d feat = encoder::featurize_force(fn, 1.0);
      for (int i = 0; i < 4; ++i)
        out.force.data[size_t((b * n + f) * 4 + i)] = float(feat(i));

      Eigen::VectorXd pose = stats.poses.normalize(
          data::pose_vector(obs.position, obs.rotation));
      for (int i = 0; i < 9; ++i)
        out.poses.data[size_t(b * (n * 9) + f * 9 + i)] = float(pose(i));
    }

    const int k = 1 + int(aug.uniform_index(u64(schedule_.num_steps())));
    out.steps[size_t(b)] = k;
    const double cs = schedule_.c_signal(k), cn = schedule_.c_noise(k);
    for (int t = 0; t < T; ++t) {
      Eigen::VectorXd a0 = stats.actions.normalize(wd.chunk[size_t(t)]);
      for (int i = 0; i < 9; ++i) {
        const double eps = aug.normal();
        const size_t at = size_t((b * 9 + i) * T + t);
        out.target.data[at] = float(eps);
        out.noisy.data[at] = float(cs * a0(i) + cn * eps);
      }
    }
  }
}

EpochStats Trainer::train_epoch(int epoch) {
  const auto t0 = std::chrono::steady_clock::now();
  const int stride = cfg_.train.window_stride;
  const size_t B = size_t(cfg_.train.batch_size);
  const u64 seed = cfg_.train.seed;

  std::vector<WindowRef> refs = dataset_.window_refs(stride, epoch % stride);
  Rng shuffle_rng(substream_seed(seed, "shuffle", u64(epoch)));
  for (size_t i = refs.size(); i > 1; --i)
    std::swap(refs[i - 1], refs[shuffle_rng.uniform_index(i)]);

  std::vector<double> episode_scale(size_t(dataset_.num_episodes()));
  for (size_t i = 0; i < episode_scale.size(); ++i) {
    Rng r(substream_seed(seed, "fscale", u64(epoch), i));
    episode_scale[i] = data::sample_force_scale(r, cfg_.data.force_aug);
  }

  Rng aug(substream_seed(seed, "aug", u64(epoch)));
  EpochStats st;
  st.epoch = epoch;
  Batch batch;
  for (size_t at = 0; at < refs.size(); at += B) {
    const size_t end = std::min(refs.size(), at + B);
    assemble(refs, at, end, episode_scale, aug, batch);

    model_->params.zero_grad();
    nn::Graph<float> g(true);
    nn::Var<float> eps = model_->predict_noise(
        g, g.input(batch.images), g.input(batch.force), g.input(batch.poses),
        g.input(batch.noisy), batch.steps);
    nn::Var<float> loss = nn::mse(g, eps, g.input(batch.target));
    const double loss_val = double(g.val(loss).data[0]);
    if (!std::isfinite(loss_val)) {
      std::ostringstream os;
      os << "trainer: non-finite loss at epoch " << epoch << " step "
         << global_step_ << "; batch windows:";
      for (const WindowRef& r : batch.refs)
        os << " (" << r.episode << "," << r.t << ")";
      throw Error(os.str());
    }
    g.backward(loss);

    double lr_scale;
    if (global_step_ < cfg_.train.lr_warmup_steps) {
      lr_scale = double(global_step_ + 1) / double(cfg_.train.lr_warmup_steps);
    } else {
      const double p = total_steps_ <= cfg_.train.lr_warmup_steps
                           ? 1.0
                           : double(global_step_ - cfg_.train.lr_warmup_steps) /
                                 double(total_steps_ -
                                        cfg_.train.lr_warmup_steps);
      lr_scale = 0.5 * (1.0 + std::cos(std::numbers::pi * std::min(1.0, p)));
    }
    opt_->step(lr_scale);
    ema_->update();
    ++global_step_;
    ++st.steps;
    st.loss_mean += loss_val;
    st.lr_scale = lr_scale;
  }
  if (st.steps > 0) st.loss_mean /= st.steps;
  st.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return st;
}

CheckpointMeta Trainer::train(const EpochHook& on_epoch) {
  std::ofstream metrics(run_dir_ + "/metrics.jsonl", std::ios::app);
  require(metrics.good(), "trainer: cannot open metrics.jsonl in " + run_dir_);

  for (int e = epochs_done_; e < cfg_.train.epochs; ++e) {
    EpochStats st = train_epoch(e);
    epochs_done_ = e + 1;

    nlohmann::json line{{"epoch", st.epoch},
                        {"steps", st.steps},
                        {"loss_mean", st.loss_mean},
                        {"lr_scale", st.lr_scale},
                        {"wall_seconds", st.wall_seconds},
                        {"global_step", global_step_}};
    metrics << line.dump() << "\n";
    metrics.flush();
    if (on_epoch) on_epoch(st);
    if (epochs_done_ % 50 == 0 && e + 1 < cfg_.train.epochs)
      save(checkpoint_path());
  }
  save(checkpoint_path());
  CheckpointMeta meta;
  meta.epochs_done = epochs_done_;
  meta.global_step = global_step_;
  return meta;
}

}  // namespace pry::diffusion
