#include "pry/rollout/evaluate.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pry/sim/simulator.hpp"

namespace pry::rollout {

using json = nlohmann::json;

int CellReport::successes() const {
  int n = 0;
  for (const TrialResult& t : trials) n += t.success ? 1 : 0;
  return n;
}

double CellReport::success_rate() const {
  if (trials.empty()) return 0.0;
  return double(successes()) / double(trials.size());
}

std::map<std::string, int> CellReport::outcome_counts() const {
  std::map<std::string, int> counts;
  for (const TrialResult& t : trials) ++counts[t.outcome];
  return counts;
}

int BenchmarkReport::total_trials(bool ood) const {
  int n = 0;
  for (const CellReport& c : cells)
    if (c.ood == ood) n += int(c.trials.size());
  return n;
}

int BenchmarkReport::total_successes(bool ood) const {
  int n = 0;
  for (const CellReport& c : cells)
    if (c.ood == ood) n += c.successes();
  return n;
}

double BenchmarkReport::rate(bool ood) const {
  const int n = total_trials(ood);
  return n == 0 ? 0.0 : double(total_successes(ood)) / double(n);
}

double BenchmarkReport::overall_rate() const {
  const int n = total_trials(false) + total_trials(true);
  if (n == 0) return 0.0;
  return double(total_successes(false) + total_successes(true)) / double(n);
}

std::string report_to_json(const BenchmarkReport& report) {
  json cells = json::array();
  for (const CellReport& c : report.cells) {
    json trials = json::array();
    for (const TrialResult& t : c.trials) {
      trials.push_back({{"cell", t.cell},
                        {"trial", t.trial},
                        {"scene_seed", t.scene_seed},
                        {"rollout_seed", t.rollout_seed},
                        {"success", t.success},
                        {"outcome", t.outcome},
                        {"steps", t.steps},
                        {"work", t.work}});
    }
    cells.push_back(
        {{"name", c.name}, {"ood", c.ood}, {"trials", std::move(trials)}});
  }
  json j = {{"suite", report.suite},
            {"variant", report.variant},
            {"suite_seed", report.suite_seed},
            {"cells", std::move(cells)}};
  return j.dump(2);
}

BenchmarkReport report_from_json(const std::string& text) {
  const json j = json::parse(text);
  BenchmarkReport report;
  report.suite = j.at("suite").get<std::string>();
  report.variant = j.at("variant").get<std::string>();
  report.suite_seed = j.at("suite_seed").get<u64>();
  for (const json& jc : j.at("cells")) {
    CellReport cell;
    cell.name = jc.at("name").get<std::string>();
    cell.ood = jc.at("ood").get<bool>();
    for (const json& jt : jc.at("trials")) {
      TrialResult t;
      t.cell = jt.at("cell").get<std::string>();
      t.trial = jt.at("trial").get<int>();
      t.scene_seed = jt.at("scene_seed").get<u64>();
      t.rollout_seed = jt.at("rollout_seed").get<u64>();
      t.success = jt.at("success").get<bool>();
      t.outcome = jt.at("outcome").get<std::string>();
      t.steps = jt.at("steps").get<int>();
      t.work = jt.at("work").get<double>();
      cell.trials.push_back(std::move(t));
    }
    report.cells.push_back(std::move(cell));
  }
  return report;
}

void save_report(const std::string& path, const BenchmarkReport& report) {
  std::ofstream out(path, std::ios::binary);
  require(bool(out), "cannot open report for writing: " + path);
  out << report_to_json(report) << "\n";
  require(bool(out), "short write: " + path);
}

BenchmarkReport load_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(bool(in), "cannot open report: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return report_from_json(buf.str());
}

std::string format_report_table(const BenchmarkReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-22s %4s %9s  %s\n", "cell", "kind",
                "success", "outcomes");
  out << report.variant << " on " << report.suite << "\n" << line;
  for (const CellReport& c : report.cells) {
    std::ostringstream outcomes;
    for (const auto& [tag, n] : c.outcome_counts())
      outcomes << tag << ":" << n << " ";
    std::snprintf(line, sizeof line, "%-22s %4s %4d/%-4zu  %s\n",
                  c.name.c_str(), c.ood ? "ood" : "id", c.successes(),
                  c.trials.size(), outcomes.str().c_str());
    out << line;
  }
  std::snprintf(line, sizeof line,
                "id %.3f (%d/%d)  ood %.3f (%d/%d)  overall %.3f\n",
                report.rate(false), report.total_successes(false),
                report.total_trials(false), report.rate(true),
                report.total_successes(true), report.total_trials(true),
                report.overall_rate());
  out << line;
  return out.str();
}

BenchmarkReport run_suite(Policy& policy, const Suite& suite,
                          const sim::RenderParams& render,
                          const sim::SimParams& sim_params,
                          const std::string& variant_label,
                          const TrialHook& hook) {
  BenchmarkReport report;
  report.suite = suite.name;
  report.variant = variant_label;
  report.suite_seed = suite.seed;
  for (size_t ci = 0; ci < suite.cells.size(); ++ci) {
    const SuiteCell& cell = suite.cells[ci];
    CellReport cr;
    cr.name = cell.name;
    cr.ood = cell.ood;
    for (int ti = 0; ti < cell.trials; ++ti) {
      TrialResult t;
      t.cell = cell.name;
      t.trial = ti;
      t.scene_seed = substream_seed(suite.seed, "scene", ci, u64(ti));
      t.rollout_seed = substream_seed(suite.seed, "trial", ci, u64(ti));
      Rng scene_rng(t.scene_seed);
      const sim::SceneConfig scene =
          sim::sample_scene(scene_rng, cell.dist, sim_params, cell.name);
      sim::Simulator sim(scene, sim_params);
      const EpisodeResult ep = rollout(sim, policy, render, t.rollout_seed);
      t.success = ep.success;
      t.outcome = ep.outcome;
      t.steps = ep.steps;
      t.work = ep.work_done;
      if (hook) hook(t, ep);
      cr.trials.push_back(std::move(t));
    }
    report.cells.push_back(std::move(cr));
  }
  return report;
}

}  // namespace pry::rollout
