#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pry/config.hpp"
#include "pry/rollout/rollout.hpp"

namespace pry::rollout {

struct TrialResult {
  std::string cell;
  int trial = 0;
  u64 scene_seed = 0;
  u64 rollout_seed = 0;
  bool success = false;
  std::string outcome;
  int steps = 0;
  double work = 0.0;
};

struct CellReport {
  std::string name;
  bool ood = false;
  std::vector<TrialResult> trials;

  int successes() const;
  double success_rate() const;
  std::map<std::string, int> outcome_counts() const;
};

// One variant x one suite. Rates pool trials, not cells, so cells with
// different trial counts weigh in proportionally.
struct BenchmarkReport {
  std::string suite;
  std::string variant;
  u64 suite_seed = 0;
  std::vector<CellReport> cells;

  int total_trials(bool ood) const;
  int total_successes(bool ood) const;
  double rate(bool ood) const;
  double overall_rate() const;
};

std::string report_to_json(const BenchmarkReport& report);
BenchmarkReport report_from_json(const std::string& text);
void save_report(const std::string& path, const BenchmarkReport& report);
BenchmarkReport load_report(const std::string& path);

// Fixed-width per-cell table plus ID/OOD/overall pooled rates.
std::string format_report_table(const BenchmarkReport& report);

// Called after every finished episode; use it for progress logging.
using TrialHook = std::function<void(const TrialResult&, const EpisodeResult&)>;

// Runs every cell of the suite. Trial (ci, ti) builds its scene from
// substream_seed(suite.seed, "scene", ci, ti) and rolls out with
// substream_seed(suite.seed, "trial", ci, ti), so reports are reproducible
// given the checkpoint and independent of evaluation order.
BenchmarkReport run_suite(Policy& policy, const Suite& suite,
                          const sim::RenderParams& render,
                          const sim::SimParams& sim_params,
                          const std::string& variant_label,
                          const TrialHook& hook = nullptr);

}  // namespace pry::rollout
