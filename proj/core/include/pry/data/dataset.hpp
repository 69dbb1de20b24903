#pragma once

#include <string>
#include <vector>

#include "pry/data/normalizer.hpp"
#include "pry/data/types.hpp"
#include "pry/sim/renderer.hpp"

namespace pry::data {

// Normalization statistics frozen at dataset-build time and carried into
// checkpoints so train and inference always agree.
struct DatasetStats {
  Normalizer actions;    // 9-dim
  Normalizer poses;      // 9-dim
  double force_norm_constant = 50.0;  // sensor saturation, N
};

// JSON text (de)serialization of the stats block; checkpoints embed the same
// object so inference never needs the dataset file.
std::string stats_to_json(const DatasetStats& stats);
DatasetStats stats_from_json(const std::string& text);

struct WindowRef {
  int episode = 0;
  int t = 0;
};

// Observation window (repeat-first padding at the episode start) plus the
// action chunk (hold-action padding past the episode end).
struct WindowData {
  std::vector<const Observation*> frames;  // n_obs entries, oldest first
  std::vector<Vec9> chunk;                 // horizon entries
};

class Dataset {
 public:
  Dataset() = default;

  static Dataset build(std::vector<Episode> episodes, u64 config_hash,
                       const sim::RenderParams& render,
                       double force_norm_constant);

  void save(const std::string& path) const;
  static Dataset load(const std::string& path);

  // Free-form JSON object for provenance (CLI paths, seeds). Round-trips
  // through save/load; excluded from nothing — it is part of the file.
  const std::string& meta() const { return meta_; }
  void set_meta(std::string meta_json) { meta_ = std::move(meta_json); }

  int num_episodes() const { return static_cast<int>(episodes_.size()); }
  i64 total_steps() const;
  const Episode& episode(int i) const { return episodes_[size_t(i)]; }
  const std::vector<Episode>& episodes() const { return episodes_; }
  const DatasetStats& stats() const { return stats_; }
  u64 config_hash() const { return config_hash_; }
  const sim::RenderParams& render_params() const { return render_; }

  WindowData window(const WindowRef& ref, int n_obs, int horizon) const;

  // All window anchors, optionally strided with a phase offset so strided
  // epochs still cover every step over time.
  std::vector<WindowRef> window_refs(int stride = 1, int phase = 0) const;

 private:
  std::vector<Episode> episodes_;
  DatasetStats stats_;
  u64 config_hash_ = 0;
  sim::RenderParams render_;
  std::string meta_ = "{}";
};

}  // namespace pry::data
