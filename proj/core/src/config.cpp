#include "pry/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pry/hashing.hpp"

namespace pry {
namespace {

using nlohmann::json;
using sim::Range;

json range_json(const Range& r) { return json{{"lo", r.lo}, {"hi", r.hi}}; }

Range range_from(const json& j) {
  Range r{j.at("lo").get<double>(), j.at("hi").get<double>()};
  require(r.lo <= r.hi, "config: range lo > hi");
  return r;
}

json render_json(const sim::RenderParams& r) {
  return json{{"height", r.height},   {"width", r.width},
              {"view_x0", r.view_x0}, {"view_x1", r.view_x1},
              {"view_z0", r.view_z0}, {"view_z1", r.view_z1}};
}

sim::RenderParams render_from(const json& j) {
  sim::RenderParams r;
  r.height = j.at("height").get<int>();
  r.width = j.at("width").get<int>();
  r.view_x0 = j.at("view_x0").get<double>();
  r.view_x1 = j.at("view_x1").get<double>();
  r.view_z0 = j.at("view_z0").get<double>();
  r.view_z1 = j.at("view_z1").get<double>();
  return r;
}

json sim_json(const sim::SimParams& p) {
  return json{{"tool_length", p.tool_length},
              {"tip_radius", p.tip_radius},
              {"shaft_half_width", p.shaft_half_width},
              {"max_step_translation", p.max_step_translation},
              {"max_step_rotation", p.max_step_rotation},
              {"force_saturation", p.force_saturation},
              {"max_steps", p.max_steps},
              {"floor_stiffness_frac", p.floor_stiffness_frac},
              {"shaft_stiffness_frac", p.shaft_stiffness_frac},
              {"recess_frac", p.recess_frac},
              {"under_reach_frac", p.under_reach_frac},
              {"lip_clearance", p.lip_clearance},
              {"success_height_frac", p.success_height_frac},
              {"battery_density", p.battery_density},
              {"gravity", p.gravity},
              {"residual_spring_frac", p.residual_spring_frac},
              {"slip_per_step", p.slip_per_step},
              {"pivot_fall_per_step", p.pivot_fall_per_step},
              {"casing_depth_min", p.casing_depth_min},
              {"casing_depth_max", p.casing_depth_max}};
}

sim::SimParams sim_from(const json& j) {
  sim::SimParams p;
  p.tool_length = j.at("tool_length").get<double>();
  p.tip_radius = j.at("tip_radius").get<double>();
  p.shaft_half_width = j.at("shaft_half_width").get<double>();
  p.max_step_translation = j.at("max_step_translation").get<double>();
  p.max_step_rotation = j.at("max_step_rotation").get<double>();
  p.force_saturation = j.at("force_saturation").get<double>();
  p.max_steps = j.at("max_steps").get<int>();
  p.floor_stiffness_frac = j.at("floor_stiffness_frac").get<double>();
  p.shaft_stiffness_frac = j.at("shaft_stiffness_frac").get<double>();
  p.recess_frac = j.at("recess_frac").get<double>();
  p.under_reach_frac = j.at("under_reach_frac").get<double>();
  p.lip_clearance = j.at("lip_clearance").get<double>();
  p.success_height_frac = j.at("success_height_frac").get<double>();
  p.battery_density = j.at("battery_density").get<double>();
  p.gravity = j.at("gravity").get<double>();
  p.residual_spring_frac = j.at("residual_spring_frac").get<double>();
  p.slip_per_step = j.at("slip_per_step").get<double>();
  p.pivot_fall_per_step = j.at("pivot_fall_per_step").get<double>();
  p.casing_depth_min = j.at("casing_depth_min").get<double>();
  p.casing_depth_max = j.at("casing_depth_max").get<double>();
  return p;
}

json dist_json(const sim::SceneDistribution& d) {
  return json{{"battery_length", range_json(d.battery_length)},
              {"battery_radius", range_json(d.battery_radius)},
              {"gap_width", range_json(d.gap_width)},
              {"casing_depth_rel", range_json(d.casing_depth_rel)},
              {"lip_height", range_json(d.lip_height)},
              {"spring_stiffness", range_json(d.spring_stiffness)},
              {"spring_preload", range_json(d.spring_preload)},
              {"traction_frac", range_json(d.traction_frac)},
              {"contact_stiffness", range_json(d.contact_stiffness)},
              {"friction_coeff", range_json(d.friction_coeff)},
              {"battery_hue", range_json(d.battery_hue)},
              {"casing_shade", range_json(d.casing_shade)},
              {"slant_angle", range_json(d.slant_angle)}};
}

sim::SceneDistribution dist_from(const json& j) {
  sim::SceneDistribution d;
  d.battery_length = range_from(j.at("battery_length"));
  d.battery_radius = range_from(j.at("battery_radius"));
  d.gap_width = range_from(j.at("gap_width"));
  d.casing_depth_rel = range_from(j.at("casing_depth_rel"));
  d.lip_height = range_from(j.at("lip_height"));
  d.spring_stiffness = range_from(j.at("spring_stiffness"));
  d.spring_preload = range_from(j.at("spring_preload"));
  d.traction_frac = range_from(j.at("traction_frac"));
  d.contact_stiffness = range_from(j.at("contact_stiffness"));
  d.friction_coeff = range_from(j.at("friction_coeff"));
  d.battery_hue = range_from(j.at("battery_hue"));
  d.casing_shade = range_from(j.at("casing_shade"));
  d.slant_angle = range_from(j.at("slant_angle"));
  return d;
}

json model_json(const ModelConfig& m) {
  return json{{"embed_dim", m.embed_dim},
              {"heads", m.heads},
              {"cnn_channels", m.cnn_channels},
              {"unet_channels", m.unet_channels},
              {"gn_groups", m.gn_groups},
              {"step_embed_dim", m.step_embed_dim},
              {"horizon", m.horizon},
              {"n_action_steps", m.n_action_steps},
              {"n_obs", m.n_obs}};
}

ModelConfig model_from(const json& j) {
  ModelConfig m;
  m.embed_dim = j.at("embed_dim").get<int>();
  m.heads = j.at("heads").get<int>();
  m.cnn_channels = j.at("cnn_channels").get<std::array<int, 3>>();
  m.unet_channels = j.at("unet_channels").get<std::array<int, 3>>();
  m.gn_groups = j.at("gn_groups").get<int>();
  m.step_embed_dim = j.at("step_embed_dim").get<int>();
  m.horizon = j.at("horizon").get<int>();
  m.n_action_steps = j.at("n_action_steps").get<int>();
  m.n_obs = j.at("n_obs").get<int>();
  return m;
}

json diffusion_json(const DiffusionConfig& d) {
  return json{{"num_steps", d.num_steps},
              {"cosine_s", d.cosine_s},
              {"beta_clip", d.beta_clip}};
}

DiffusionConfig diffusion_from(const json& j) {
  DiffusionConfig d;
  d.num_steps = j.at("num_steps").get<int>();
  d.cosine_s = j.at("cosine_s").get<double>();
  d.beta_clip = j.at("beta_clip").get<double>();
  return d;
}

json train_json(const TrainConfig& t) {
  return json{{"lr", t.lr},
              {"weight_decay", t.weight_decay},
              {"batch_size", t.batch_size},
              {"epochs", t.epochs},
              {"ema_decay", t.ema_decay},
              {"lr_warmup_steps", t.lr_warmup_steps},
              {"window_stride", t.window_stride},
              {"seed", t.seed}};
}

TrainConfig train_from(const json& j) {
  TrainConfig t;
  t.lr = j.at("lr").get<double>();
  t.weight_decay = j.at("weight_decay").get<double>();
  t.batch_size = j.at("batch_size").get<int>();
  t.epochs = j.at("epochs").get<int>();
  t.ema_decay = j.at("ema_decay").get<double>();
  t.lr_warmup_steps = j.at("lr_warmup_steps").get<int>();
  t.window_stride = j.at("window_stride").get<int>();
  t.seed = j.at("seed").get<u64>();
  return t;
}

json data_json(const DataConfig& d) {
  return json{{"episodes", d.episodes},
              {"crop", d.crop},
              {"force_aug",
               {{"scale_lo", d.force_aug.scale_lo},
                {"scale_hi", d.force_aug.scale_hi},
                {"noise_std", d.force_aug.noise_std}}},
              {"image_aug",
               {{"brightness", d.image_aug.brightness},
                {"contrast", d.image_aug.contrast},
                {"saturation", d.image_aug.saturation},
                {"hue", d.image_aug.hue}}}};
}

DataConfig data_from(const json& j) {
  DataConfig d;
  d.episodes = j.at("episodes").get<int>();
  d.crop = j.at("crop").get<int>();
  const json& f = j.at("force_aug");
  d.force_aug.scale_lo = f.at("scale_lo").get<double>();
  d.force_aug.scale_hi = f.at("scale_hi").get<double>();
  d.force_aug.noise_std = f.at("noise_std").get<double>();
  const json& im = j.at("image_aug");
  d.image_aug.brightness = im.at("brightness").get<double>();
  d.image_aug.contrast = im.at("contrast").get<double>();
  d.image_aug.saturation = im.at("saturation").get<double>();
  d.image_aug.hue = im.at("hue").get<double>();
  return d;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kB: return "dp_b";
    case Variant::kLF: return "dp_lf";
    case Variant::kPF: return "dp_pf";
    case Variant::kCA: return "dp_ca";
  }
  fail("bad variant");
}

std::string variant_label(Variant v) {
  switch (v) {
    case Variant::kB: return "DP-B";
    case Variant::kLF: return "DP-LF";
    case Variant::kPF: return "DP-PF";
    case Variant::kCA: return "DP-CA";
  }
  fail("bad variant");
}

Variant variant_from_name(const std::string& name) {
  for (Variant v : kAllVariants)
    if (name == variant_name(v) || name == variant_label(v)) return v;
  fail("unknown variant '" + name + "'");
}

void ExperimentConfig::validate() const {
  require(!train_cells.empty(), "config: need at least one train cell");
  for (size_t i = 0; i < train_cells.size(); ++i) {
    require(!train_cells[i].name.empty(), "config: train cell without a name");
    for (size_t j = i + 1; j < train_cells.size(); ++j)
      require(train_cells[i].name != train_cells[j].name,
              "config: duplicate train cell '" + train_cells[i].name + "'");
  }
  require(model.embed_dim > 0 && model.heads > 0 &&
              model.embed_dim % model.heads == 0,
          "config: embed_dim must be divisible by heads");
  require(model.gn_groups > 0, "config: gn_groups must be positive");
  for (int c : model.cnn_channels)
    require(c > 0 && c % model.gn_groups == 0,
            "config: cnn channels must be multiples of gn_groups");
  for (int c : model.unet_channels)
    require(c > 0 && c % model.gn_groups == 0,
            "config: unet channels must be multiples of gn_groups");
  require(model.embed_dim % model.gn_groups == 0,
          "config: embed_dim must be a multiple of gn_groups");
  require(model.step_embed_dim >= 2 && model.step_embed_dim % 2 == 0,
          "config: step_embed_dim must be even and >= 2");
  require(model.n_obs >= 1, "config: n_obs must be >= 1");
  require(model.horizon >= 1 && model.n_action_steps >= 1 &&
              model.n_action_steps <= model.horizon,
          "config: need 1 <= n_action_steps <= horizon");
  require(model.horizon % 4 == 0,
          "config: horizon must be divisible by 4 (two U-Net downsamples)");
  require(diffusion.num_steps >= 1, "config: num_steps must be >= 1");
  require(diffusion.cosine_s > 0.0, "config: cosine_s must be positive");
  require(diffusion.beta_clip > 0.0 && diffusion.beta_clip <= 1.0,
          "config: beta_clip must be in (0, 1]");
  require(train.lr > 0.0 && train.batch_size >= 1 && train.epochs >= 1,
          "config: bad optimizer settings");
  require(train.ema_decay >= 0.0 && train.ema_decay <= 1.0,
          "config: ema_decay must be in [0, 1]");
  require(train.window_stride >= 1, "config: window_stride must be >= 1");
  require(data.episodes >= 1, "config: episodes must be >= 1");
  require(data.crop >= 8 && data.crop <= render.height &&
              data.crop <= render.width,
          "config: crop must fit inside the rendered image");
  require(data.crop % 8 == 0,
          "config: crop must be divisible by 8 (three CNN downsamples)");
  require(render.view_x1 > render.view_x0 && render.view_z1 > render.view_z0,
          "config: empty render window");
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json cells = json::array();
  for (const TrainCell& c : cfg.train_cells)
    cells.push_back({{"name", c.name}, {"dist", dist_json(c.dist)}});
  json j{{"profile", cfg.profile},
         {"render", render_json(cfg.render)},
         {"sim", sim_json(cfg.sim)},
         {"train_cells", std::move(cells)},
         {"model", model_json(cfg.model)},
         {"diffusion", diffusion_json(cfg.diffusion)},
         {"train", train_json(cfg.train)},
         {"data", data_json(cfg.data)}};
  return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail(std::string("config: invalid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    cfg.profile = j.at("profile").get<std::string>();
    cfg.render = render_from(j.at("render"));
    cfg.sim = sim_from(j.at("sim"));
    for (const json& jc : j.at("train_cells")) {
      TrainCell c;
      c.name = jc.at("name").get<std::string>();
      c.dist = dist_from(jc.at("dist"));
      cfg.train_cells.push_back(std::move(c));
    }
    cfg.model = model_from(j.at("model"));
    cfg.diffusion = diffusion_from(j.at("diffusion"));
    cfg.train = train_from(j.at("train"));
    cfg.data = data_from(j.at("data"));
  } catch (const json::exception& e) {
    fail(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  return config_from_json(read_file(path));
}

u64 config_hash(const ExperimentConfig& cfg) {
  // json objects serialize with sorted keys, so dump(0-indent) is canonical.
  return fnv1a64(json::parse(config_to_json(cfg)).dump());
}

std::string suite_to_json(const Suite& suite) {
  json cells = json::array();
  for (const SuiteCell& c : suite.cells)
    cells.push_back({{"name", c.name},
                     {"ood", c.ood},
                     {"trials", c.trials},
                     {"dist", dist_json(c.dist)}});
  return json{{"name", suite.name}, {"seed", suite.seed},
              {"cells", std::move(cells)}}
      .dump(2);
}

Suite suite_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail(std::string("suite: invalid JSON: ") + e.what());
  }
  Suite s;
  try {
    s.name = j.at("name").get<std::string>();
    s.seed = j.at("seed").get<u64>();
    for (const json& jc : j.at("cells")) {
      SuiteCell c;
      c.name = jc.at("name").get<std::string>();
      c.ood = jc.at("ood").get<bool>();
      c.trials = jc.at("trials").get<int>();
      c.dist = dist_from(jc.at("dist"));
      require(c.trials >= 1, "suite: trials must be >= 1");
      s.cells.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    fail(std::string("suite: ") + e.what());
  }
  require(!s.cells.empty(), "suite: no cells");
  return s;
}

Suite load_suite(const std::string& path) {
  return suite_from_json(read_file(path));
}

ExperimentConfig desk_config() {
  ExperimentConfig cfg;
  const sim::SceneDistribution base;
  cfg.train_cells.reserve(5);

  // Three battery formats plus two non-geometric variants; everything not
  // overridden stays at the broad training range, so the corpus hull is the
  // base distribution.
  TrainCell c;
  c.name = "fmt_small";
  c.dist = base;
  c.dist.battery_length = {0.040, 0.044};
  c.dist.battery_radius = {0.0055, 0.0063};
  cfg.train_cells.push_back(c);
  c.name = "fmt_medium";
  c.dist = base;
  c.dist.battery_length = {0.044, 0.048};
  c.dist.battery_radius = {0.0063, 0.0071};
  cfg.train_cells.push_back(c);
  c.name = "fmt_large";
  c.dist = base;
  c.dist.battery_length = {0.048, 0.052};
  c.dist.battery_radius = {0.0071, 0.0080};
  cfg.train_cells.push_back(c);
  c.name = "fmt_stiff";
  c.dist = base;
  c.dist.spring_stiffness = {1300.0, 1500.0};
  c.dist.spring_preload = {13.0, 16.0};
  cfg.train_cells.push_back(c);
  c.name = "fmt_slick";
  c.dist = base;
  c.dist.friction_coeff = {0.20, 0.26};
  cfg.train_cells.push_back(c);
  return cfg;
}

Suite desk_suite() {
  const sim::SceneDistribution base;  // training distribution
  Suite s;
  s.name = "desk";
  s.seed = 7;
  s.cells.reserve(12);

  auto cell = [&](const std::string& name, bool ood) {
    SuiteCell c;
    c.name = name;
    c.ood = ood;
    c.trials = 10;
    c.dist = base;
    s.cells.push_back(c);
    return &s.cells.back();
  };

  // In-distribution: narrow slices of the training ranges. The first three
  // mimic distinct battery formats; the rest isolate non-geometric factors.
  SuiteCell* c = cell("id_small", false);
  c->dist.battery_length = {0.040, 0.044};
  c->dist.battery_radius = {0.0055, 0.0063};
  c = cell("id_medium", false);
  c->dist.battery_length = {0.044, 0.048};
  c->dist.battery_radius = {0.0063, 0.0071};
  c = cell("id_large", false);
  c->dist.battery_length = {0.048, 0.052};
  c->dist.battery_radius = {0.0071, 0.0080};
  c = cell("id_narrow_gap", false);
  c->dist.gap_width = {0.0035, 0.0042};
  c = cell("id_stiff_spring", false);
  c->dist.spring_stiffness = {1300.0, 1500.0};
  c->dist.spring_preload = {13.0, 16.0};
  c = cell("id_slick", false);
  c->dist.friction_coeff = {0.20, 0.26};

  // Out-of-distribution: each moves at least one parameter outside the
  // training range while staying winnable (friction stays above the
  // lift-slip cone; geometry keeps the tip able to reach the slot floor).
  c = cell("ood_long", true);
  c->dist.battery_length = {0.054, 0.060};
  c = cell("ood_thick", true);
  c->dist.battery_radius = {0.0082, 0.0092};
  c = cell("ood_color", true);
  c->dist.battery_hue = {0.55, 0.80};
  c->dist.casing_shade = {0.30, 0.42};
  c = cell("ood_slick", true);
  c->dist.friction_coeff = {0.15, 0.19};
  c = cell("ood_preload", true);
  c->dist.spring_preload = {17.0, 20.0};
  c = cell("ood_deep", true);
  c->dist.casing_depth_rel = {2.3, 2.6};

  return s;
}

}  // namespace pry
