// pry: dataset generation, training, evaluation, and plotting for the
// compliant battery-prying diffusion policy.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pry/config.hpp"
#include "pry/data/recorder.hpp"
#include "pry/diffusion/trainer.hpp"
#include "pry/rollout/evaluate.hpp"
#include "pry/rollout/force_report.hpp"
#include "svg_plots.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

using namespace pry;

// Demonstrations are successful expert episodes only. A failed attempt
// redraws both the scene and the expert style from the next substream; a
// cell that cannot produce a success within the attempt budget is a physics
// or expert bug and aborts loudly.
data::Dataset generate_dataset(const ExperimentConfig& cfg, u64 seed,
                               int episodes, const std::string& config_path) {
  require(!cfg.train_cells.empty(), "config has no train_cells");
  std::vector<data::Episode> demos;
  demos.reserve(size_t(episodes));
  constexpr int kMaxAttempts = 40;
  i64 attempts_total = 0;
  for (int i = 0; i < episodes; ++i) {
    const TrainCell& cell = cfg.train_cells[size_t(i) % cfg.train_cells.size()];
    bool ok = false;
    for (int attempt = 0; attempt < kMaxAttempts && !ok; ++attempt) {
      ++attempts_total;
      Rng scene_rng(substream_seed(seed, "demo-scene", u64(i), u64(attempt)));
      const sim::SceneConfig scene =
          sim::sample_scene(scene_rng, cell.dist, cfg.sim, cell.name);
      data::Episode ep = data::record_episode(
          scene, substream_seed(seed, "demo-episode", u64(i), u64(attempt)),
          cfg.render, cfg.sim);
      if (ep.success) {
        demos.push_back(std::move(ep));
        ok = true;
      }
    }
    require(ok, "expert failed " + std::to_string(kMaxAttempts) +
                    " attempts in cell '" + cell.name + "' (episode " +
                    std::to_string(i) + ")");
    if ((i + 1) % 10 == 0 || i + 1 == episodes)
      std::printf("  demos %d/%d (attempts %lld)\n", i + 1, episodes,
                  static_cast<long long>(attempts_total));
  }

  data::Dataset ds = data::Dataset::build(std::move(demos), config_hash(cfg),
                                          cfg.render, cfg.sim.force_saturation);
  const json meta = {{"tool", "pry gen-data"},
                     {"config", config_path},
                     {"seed", seed},
                     {"episodes", episodes},
                     {"attempts", attempts_total}};
  ds.set_meta(meta.dump());
  return ds;
}

std::vector<Variant> parse_variants(const std::string& spec) {
  if (spec == "all")
    return {kAllVariants.begin(), kAllVariants.end()};
  std::vector<Variant> out;
  std::istringstream in(spec);
  std::string tok;
  while (std::getline(in, tok, ','))
    if (!tok.empty()) out.push_back(variant_from_name(tok));
  require(!out.empty(), "no variants in '" + spec + "'");
  return out;
}

int cmd_gen_data(const std::string& config_path, const std::string& out_path,
                 int episodes_override, i64 seed_override) {
  ExperimentConfig cfg = load_config(config_path);
  const int episodes =
      episodes_override > 0 ? episodes_override : cfg.data.episodes;
  const u64 seed = seed_override >= 0 ? u64(seed_override) : cfg.train.seed;
  std::printf("generating %d demonstrations (seed %llu)\n", episodes,
              static_cast<unsigned long long>(seed));
  data::Dataset ds = generate_dataset(cfg, seed, episodes, config_path);
  if (const fs::path dir = fs::path(out_path).parent_path(); !dir.empty())
    fs::create_directories(dir);
  ds.save(out_path);
  std::printf("wrote %s: %d episodes, %lld steps\n", out_path.c_str(),
              ds.num_episodes(), static_cast<long long>(ds.total_steps()));
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& dataset_path,
              const std::string& variant_spec, const std::string& out_dir,
              int epochs_override, i64 seed_override, bool resume) {
  ExperimentConfig cfg = load_config(config_path);
  if (epochs_override > 0) cfg.train.epochs = epochs_override;
  if (seed_override >= 0) cfg.train.seed = u64(seed_override);
  const data::Dataset ds = data::Dataset::load(dataset_path);
  require(ds.config_hash() == config_hash(cfg),
          "dataset was generated under a different config (hash mismatch); "
          "regenerate it or pass the matching config");

  for (Variant v : parse_variants(variant_spec)) {
    const std::string run_dir =
        (fs::path(out_dir) / variant_name(v)).string();
    std::printf("== %s -> %s\n", variant_label(v).c_str(), run_dir.c_str());
    diffusion::Trainer trainer(cfg, v, ds, run_dir);
    if (resume && fs::exists(trainer.checkpoint_path()))
      trainer.resume_from(trainer.checkpoint_path());
    trainer.train([](const diffusion::EpochStats& s) {
      std::printf("  epoch %4d  loss %.5f  lr x%.3f  %.1fs\n", s.epoch,
                  s.loss_mean, s.lr_scale, s.wall_seconds);
      std::fflush(stdout);
    });
    std::printf("saved %s\n", trainer.checkpoint_path().c_str());
  }
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& suite_path,
             const std::string& out_path, const std::string& trace_dir,
             i64 seed_override) {
  diffusion::LoadedPolicy<float> lp =
      diffusion::load_policy<float>(checkpoint_path);
  Suite suite = suite_path.empty() ? desk_suite() : load_suite(suite_path);
  if (seed_override >= 0) suite.seed = u64(seed_override);
  rollout::DiffusionPolicy policy(*lp.model, lp.stats, lp.cfg);

  if (!trace_dir.empty()) fs::create_directories(trace_dir);
  const rollout::TrialHook hook = [&](const rollout::TrialResult& t,
                                      const rollout::EpisodeResult& ep) {
    std::printf("  %-22s trial %2d  %s (%d steps)\n", t.cell.c_str(), t.trial,
                t.outcome.c_str(), t.steps);
    std::fflush(stdout);
    if (!trace_dir.empty()) {
      const std::string name =
          t.cell + "_t" + std::to_string(t.trial) + "_" + t.outcome + ".csv";
      rollout::write_trace_csv((fs::path(trace_dir) / name).string(),
                               ep.phases, ep.forces);
    }
  };

  const rollout::BenchmarkReport report =
      rollout::run_suite(policy, suite, lp.cfg.render, lp.cfg.sim,
                         variant_label(lp.model->variant), hook);
  std::printf("%s", rollout::format_report_table(report).c_str());
  if (!out_path.empty()) {
    if (const fs::path dir = fs::path(out_path).parent_path(); !dir.empty())
      fs::create_directories(dir);
    rollout::save_report(out_path, report);
    std::printf("wrote %s\n", out_path.c_str());
  }
  return 0;
}

int cmd_plot(const std::vector<std::string>& report_paths,
             const std::vector<std::string>& trace_paths,
             const std::string& out_dir) {
  fs::create_directories(out_dir);
  if (!report_paths.empty()) {
    std::vector<rollout::BenchmarkReport> reports;
    for (const std::string& p : report_paths)
      reports.push_back(rollout::load_report(p));
    const std::string path = (fs::path(out_dir) / "success_rates.svg").string();
    tools::write_text_file(path, tools::rates_svg(reports));
    std::printf("wrote %s\n", path.c_str());
  }
  if (!trace_paths.empty()) {
    std::vector<tools::TraceSeries> series;
    for (const std::string& p : trace_paths)
      series.push_back(tools::load_trace_csv(p, fs::path(p).stem().string()));
    const std::string path = (fs::path(out_dir) / "force_traces.svg").string();
    tools::write_text_file(path, tools::traces_svg(series));
    std::printf("wrote %s\n", path.c_str());
  }
  if (report_paths.empty() && trace_paths.empty())
    std::printf("nothing to plot: pass --report and/or --trace\n");
  return 0;
}

int cmd_dump_config(const std::string& what, const std::string& out_path) {
  std::string text;
  if (what == "desk")
    text = config_to_json(desk_config());
  else if (what == "suite")
    text = suite_to_json(desk_suite());
  else
    fail("unknown config '" + what + "' (expected desk or suite)");
  if (out_path.empty()) {
    std::printf("%s\n", text.c_str());
  } else {
    tools::write_text_file(out_path, text + "\n");
    std::printf("wrote %s\n", out_path.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"force-guided diffusion policy for compliant battery prying"};
  app.require_subcommand(1);

  std::string config_path = "configs/desk.json";
  std::string dataset_path;
  std::string out_path;
  std::string out_dir = "runs";
  std::string suite_path;
  std::string trace_dir;
  std::string variant_spec = "all";
  std::string checkpoint_path;
  std::string what = "desk";
  std::vector<std::string> report_paths;
  std::vector<std::string> trace_paths;
  int episodes = 0;
  int epochs = 0;
  i64 seed = -1;
  bool resume = false;

  CLI::App* gen = app.add_subcommand("gen-data", "record expert demonstrations");
  gen->add_option("--config", config_path, "experiment config json");
  gen->add_option("--out", out_path, "output dataset path")->required();
  gen->add_option("--episodes", episodes, "override data.episodes");
  gen->add_option("--seed", seed, "override train.seed for generation");

  CLI::App* train = app.add_subcommand("train", "train policy variants");
  train->add_option("--config", config_path, "experiment config json");
  train->add_option("--dataset", dataset_path, "dataset path")->required();
  train->add_option("--variant", variant_spec,
                    "dp_b|dp_lf|dp_pf|dp_ca, comma list, or all");
  train->add_option("--out", out_dir, "runs root; run dir is <out>/<variant>");
  train->add_option("--epochs", epochs, "override train.epochs");
  train->add_option("--seed", seed, "override train.seed");
  train->add_flag("--resume", resume, "resume from <run>/checkpoint.bin");

  CLI::App* ev = app.add_subcommand("eval", "run the benchmark suite");
  ev->add_option("--checkpoint", checkpoint_path, "trained checkpoint")
      ->required();
  ev->add_option("--suite", suite_path, "suite json (default: built-in desk)");
  ev->add_option("--out", out_path, "report json output");
  ev->add_option("--trace-dir", trace_dir, "write per-trial force csv here");
  ev->add_option("--seed", seed, "override suite.seed");

  CLI::App* plot = app.add_subcommand("plot", "render svg plots");
  plot->add_option("--report", report_paths, "benchmark report json(s)");
  plot->add_option("--trace", trace_paths, "force trace csv(s)");
  plot->add_option("--out", out_dir, "output directory");

  CLI::App* dump = app.add_subcommand("dump-config",
                                      "print a registered default config");
  dump->add_option("--what", what, "desk | suite");
  dump->add_option("--out", out_path, "write here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(config_path, out_path, episodes, seed);
    if (train->parsed())
      return cmd_train(config_path, dataset_path, variant_spec, out_dir,
                       epochs, seed, resume);
    if (ev->parsed())
      return cmd_eval(checkpoint_path, suite_path, out_path, trace_dir, seed);
    if (plot->parsed()) return cmd_plot(report_paths, trace_paths, out_dir);
    if (dump->parsed()) return cmd_dump_config(what, out_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
