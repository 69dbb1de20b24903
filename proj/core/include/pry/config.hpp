#pragma once

#include <array>
#include <string>
#include <vector>

#include "pry/common.hpp"
#include "pry/data/augment.hpp"
#include "pry/sim/renderer.hpp"
#include "pry/sim/scene.hpp"

namespace pry {

// Policy variants, in reporting order.
enum class Variant { kB = 0, kLF = 1, kPF = 2, kCA = 3 };

constexpr std::array<Variant, 4> kAllVariants{Variant::kB, Variant::kLF,
                                              Variant::kPF, Variant::kCA};

// Filesystem-safe name ("dp_b") and display label ("DP-B").
std::string variant_name(Variant v);
std::string variant_label(Variant v);
Variant variant_from_name(const std::string& name);

struct ModelConfig {
  int embed_dim = 128;     // token dim of image features / projected force
  int heads = 4;
  std::array<int, 3> cnn_channels{8, 16, 32};
  std::array<int, 3> unet_channels{64, 128, 256};
  int gn_groups = 8;
  int step_embed_dim = 8;  // sinusoidal diffusion-step embedding
  int horizon = 16;        // predicted action steps
  int n_action_steps = 6;  // executed before re-planning
  int n_obs = 2;           // conditioning frames
};

struct DiffusionConfig {
  int num_steps = 100;
  double cosine_s = 0.008;
  double beta_clip = 0.999;
};

struct TrainConfig {
  double lr = 2e-4;
  double weight_decay = 1e-3;
  int batch_size = 72;
  int epochs = 300;
  double ema_decay = 0.995;
  int lr_warmup_steps = 50;
  int window_stride = 8;  // epoch e anchors windows at t % stride == e % stride
  u64 seed = 1;
};

struct DataConfig {
  int episodes = 200;
  int crop = 56;  // training crop; the CNN always sees crop x crop
  data::ForceAugmentParams force_aug;
  data::ImageAugmentParams image_aug;
};

// Named slice of scene space used for demonstration collection. Episode i
// draws from cell i % cells.size(), so the corpus covers every variant.
struct TrainCell {
  std::string name;
  sim::SceneDistribution dist;
};

struct ExperimentConfig {
  std::string profile = "desk";
  sim::RenderParams render;
  sim::SimParams sim;
  std::vector<TrainCell> train_cells;
  ModelConfig model;
  DiffusionConfig diffusion;
  TrainConfig train;
  DataConfig data;

  void validate() const;
};

ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

// FNV-1a over the canonical serialization. Stored in datasets and
// checkpoints so mismatched artifacts fail loudly instead of silently.
u64 config_hash(const ExperimentConfig& cfg);

// ---- evaluation suite -------------------------------------------------

// One randomization cell: a narrow scene distribution plus a label. ID
// cells sit inside the training distribution; OOD cells move at least one
// parameter outside it (while staying physically winnable).
struct SuiteCell {
  std::string name;
  bool ood = false;
  int trials = 10;
  sim::SceneDistribution dist;
};

struct Suite {
  std::string name = "suite";
  u64 seed = 7;
  std::vector<SuiteCell> cells;
};

Suite suite_from_json(const std::string& text);
std::string suite_to_json(const Suite& suite);
Suite load_suite(const std::string& path);

// Registered defaults. The checked-in config files mirror these; tests pin
// against the in-code versions so a drifted file fails loudly.
ExperimentConfig desk_config();
Suite desk_suite();

}  // namespace pry
