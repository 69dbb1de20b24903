#pragma once

#include <memory>
#include <string>

#include "pry/data/dataset.hpp"
#include "pry/diffusion/policy.hpp"
#include "pry/nn/optimizer.hpp"

namespace pry::diffusion {

// Checkpoints carry everything a resumed run or a later evaluation needs:
// raw and EMA weights, Adam moments, step counters, the trainer rng state,
// the full experiment config, and the dataset normalization stats. Weights
// are widened to f64 on disk so float runs round-trip bit-exactly.
inline constexpr char kCheckpointMagic[] = "PRYCKPT1";
inline constexpr u32 kCheckpointVersion = 1;

struct CheckpointMeta {
  int epochs_done = 0;
  i64 global_step = 0;
  std::string rng_state;
};

template <class S>
void save_checkpoint(const std::string& path, PolicyModel<S>& model,
                     nn::AdamW<S>& opt, nn::Ema<S>& ema,
                     const CheckpointMeta& meta, const ExperimentConfig& cfg,
                     const data::DatasetStats& stats);

// Resume path: the live config must hash identically to the stored one and
// the variant must match; anything else is a hard error, not a best effort.
template <class S>
CheckpointMeta resume_checkpoint(const std::string& path,
                                 PolicyModel<S>& model, nn::AdamW<S>& opt,
                                 nn::Ema<S>& ema, const ExperimentConfig& cfg);

// Inference path: reconstructs the model from the stored config and installs
// the EMA weights as the live parameters.
template <class S>
struct LoadedPolicy {
  ExperimentConfig cfg;
  data::DatasetStats stats;
  CheckpointMeta meta;
  std::unique_ptr<PolicyModel<S>> model;
};

template <class S>
LoadedPolicy<S> load_policy(const std::string& path);

}  // namespace pry::diffusion
