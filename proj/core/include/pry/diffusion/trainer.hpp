#pragma once

#include <functional>
#include <memory>
#include <string>

#include "pry/data/dataset.hpp"
#include "pry/diffusion/checkpoint.hpp"
#include "pry/diffusion/schedule.hpp"

namespace pry::diffusion {

struct EpochStats {
  int epoch = 0;
  int steps = 0;
  double loss_mean = 0.0;
  double lr_scale = 0.0;
  double wall_seconds = 0.0;
};

// Single-threaded float trainer. Every source of randomness in an epoch is
// derived statelessly from (train.seed, epoch), so running E epochs straight
// or split across resumed runs yields bit-identical weights. Epoch e uses
// window anchors strided by train.window_stride with phase e % stride, which
// sweeps every anchor over consecutive epochs.
class Trainer {
 public:
  Trainer(const ExperimentConfig& cfg, Variant variant,
          const data::Dataset& dataset, std::string run_dir);
  ~Trainer();

  // Restores weights, moments, EMA, and counters saved at an epoch boundary.
  void resume_from(const std::string& checkpoint_path);

  // Runs epochs [epochs_done, cfg.train.epochs). Appends one metrics.jsonl
  // line per epoch and keeps run_dir/checkpoint.bin current.
  using EpochHook = std::function<void(const EpochStats&)>;
  CheckpointMeta train(const EpochHook& on_epoch = {});

  void save(const std::string& path) const;
  std::string checkpoint_path() const;

  PolicyModel<float>& model() { return *model_; }
  nn::Ema<float>& ema() { return *ema_; }
  int epochs_done() const { return epochs_done_; }

 private:
  struct Batch;
  void assemble(const std::vector<data::WindowRef>& refs, size_t begin,
                size_t end, const std::vector<double>& episode_scale,
                Rng& aug, Batch& out) const;
  EpochStats train_epoch(int epoch);
  i64 planned_total_steps() const;

  ExperimentConfig cfg_;
  Variant variant_;
  const data::Dataset& dataset_;
  std::string run_dir_;
  Schedule schedule_;
  std::unique_ptr<PolicyModel<float>> model_;
  std::unique_ptr<nn::AdamW<float>> opt_;
  std::unique_ptr<nn::Ema<float>> ema_;
  int epochs_done_ = 0;
  i64 global_step_ = 0;
  i64 total_steps_ = 0;
};

}  // namespace pry::diffusion
