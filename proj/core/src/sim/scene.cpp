#include "pry/sim/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

namespace pry::sim {
namespace {

using nlohmann::json;

void check(bool ok, const std::string& what) {
  if (!ok) fail("SceneConfig: " + what);
}

Color hsv(double h, double s, double v) {
  // h in [0,1). Standard conversion, enough for scene styling.
  const double hh = std::fmod(h, 1.0) * 6.0;
  const int i = static_cast<int>(hh);
  const double f = hh - i;
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (i % 6) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

json color_to_json(const Color& c) { return json::array({c[0], c[1], c[2]}); }

Color color_from_json(const json& j) {
  require(j.is_array() && j.size() == 3, "scene json: color must be [r,g,b]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

void SceneConfig::validate() const {
  const SimParams params;  // fixed rig bounds
  check(battery_length > 0 && battery_radius > 0 && gap_width > 0,
        "dimensions must be positive");
  check(gap_width < battery_radius,
        "gap_width must be smaller than battery_radius (gap " +
            std::to_string(gap_width) + " vs radius " +
            std::to_string(battery_radius) + ")");
  check(casing_depth >= params.casing_depth_min &&
            casing_depth <= params.casing_depth_max,
        "casing_depth " + std::to_string(casing_depth) + " outside [" +
            std::to_string(params.casing_depth_min) + ", " +
            std::to_string(params.casing_depth_max) + "]");
  check(lip_height > 0 && lip_height < 0.12 * battery_length,
        "lip_height must be in (0, 0.12*battery_length)");
  check(spring_stiffness > 0 && spring_preload > 0,
        "spring parameters must be positive");
  check(traction_threshold > 0, "traction_threshold must be positive");
  check(contact_stiffness > 0, "contact_stiffness must be positive");
  check(friction_coeff >= 0 && friction_coeff < 1.5,
        "friction_coeff must be in [0, 1.5)");
  for (const Color* c :
       {&style.casing_color, &style.battery_color, &style.background_color}) {
    for (double v : *c)
      check(v >= 0.0 && v <= 1.0, "style colors must be in [0, 1]");
  }
  check(style.slant_angle >= 0 && style.slant_angle < 0.6,
        "slant_angle must be in [0, 0.6)");
}

SceneLayout derive_layout(const SceneConfig& scene, const SimParams& params) {
  SceneLayout lay;
  lay.gap = scene.gap_width;
  lay.length = scene.battery_length;
  lay.radius = scene.battery_radius;
  lay.wall_top = scene.casing_depth;
  lay.slot_depth = params.recess_frac * scene.battery_radius;
  lay.under_reach = params.under_reach_frac * scene.gap_width;
  lay.pivot_x = scene.gap_width + scene.battery_length;
  const double rise = scene.lip_height + params.lip_clearance;
  require(rise < scene.battery_length,
          "scene: lip rise exceeds battery length");
  lay.free_angle = std::asin(rise / scene.battery_length);
  lay.max_angle = lay.free_angle + 0.10;
  lay.spring_torque_preload = scene.spring_preload * scene.battery_radius;
  lay.spring_torque_stiffness =
      scene.spring_stiffness * scene.battery_radius * scene.battery_radius;
  const double volume = std::numbers::pi * scene.battery_radius *
                        scene.battery_radius * scene.battery_length;
  lay.battery_weight = params.battery_density * volume * params.gravity;
  lay.lift_drag = scene.friction_coeff * params.residual_spring_frac *
                  scene.spring_preload;
  lay.lift_load = lay.battery_weight + lay.lift_drag;
  lay.success_height = params.success_height_frac * scene.battery_radius;
  return lay;
}

double battery_equilibrium(double tool_torque, const SceneLayout& layout) {
  const double excess = tool_torque - layout.spring_torque_preload;
  if (excess <= 0.0) return 0.0;
  return std::min(excess / layout.spring_torque_stiffness, layout.max_angle);
}

SceneConfig sample_scene(Rng& rng, const SceneDistribution& dist,
                         const SimParams& params,
                         const std::string& object_id) {
  SceneConfig s;
  s.object_id = object_id;
  s.battery_radius = dist.battery_radius.sample(rng);
  s.battery_length = dist.battery_length.sample(rng);
  // keep the gap strictly inside the battery radius
  s.gap_width = std::min(dist.gap_width.sample(rng), 0.85 * s.battery_radius);
  s.casing_depth =
      std::clamp(dist.casing_depth_rel.sample(rng) * s.battery_radius,
                 params.casing_depth_min, params.casing_depth_max);
  s.lip_height =
      std::min(dist.lip_height.sample(rng), 0.10 * s.battery_length);
  s.spring_stiffness = dist.spring_stiffness.sample(rng);
  s.spring_preload = dist.spring_preload.sample(rng);
  s.contact_stiffness = dist.contact_stiffness.sample(rng);
  s.friction_coeff = dist.friction_coeff.sample(rng);
  const double traction_frac = dist.traction_frac.sample(rng);
  s.traction_threshold = 1.0;  // placeholder until layout-dependent value below
  const SceneLayout lay = derive_layout(s, params);
  s.traction_threshold = traction_frac * lay.lift_load;

  s.style.battery_color = hsv(dist.battery_hue.sample(rng),
                              rng.uniform(0.55, 0.85), rng.uniform(0.5, 0.8));
  const double shade = dist.casing_shade.sample(rng);
  s.style.casing_color = {shade, shade, shade + rng.uniform(0.0, 0.05)};
  const double bg = rng.uniform(0.82, 0.95);
  s.style.background_color = {bg, bg, bg - rng.uniform(0.0, 0.04)};
  s.style.slant_angle = dist.slant_angle.sample(rng);
  s.validate();
  return s;
}

SceneConfig scene_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(std::string("scene json: parse error: ") + e.what());
  }
  SceneConfig s;
  s.battery_length = j.at("battery_length").get<double>();
  s.battery_radius = j.at("battery_radius").get<double>();
  s.gap_width = j.at("gap_width").get<double>();
  s.casing_depth = j.at("casing_depth").get<double>();
  s.lip_height = j.at("lip_height").get<double>();
  s.spring_stiffness = j.at("spring_stiffness").get<double>();
  s.spring_preload = j.at("spring_preload").get<double>();
  s.traction_threshold = j.at("traction_threshold").get<double>();
  s.contact_stiffness = j.at("contact_stiffness").get<double>();
  s.friction_coeff = j.at("friction_coeff").get<double>();
  if (j.contains("style")) {
    const json& st = j["style"];
    s.style.casing_color = color_from_json(st.at("casing_color"));
    s.style.battery_color = color_from_json(st.at("battery_color"));
    s.style.background_color = color_from_json(st.at("background_color"));
    s.style.slant_angle = st.at("slant_angle").get<double>();
  }
  s.object_id = j.value("object_id", std::string("unnamed"));
  s.validate();
  return s;
}

std::string scene_to_json(const SceneConfig& s) {
  json j{{"battery_length", s.battery_length},
         {"battery_radius", s.battery_radius},
         {"gap_width", s.gap_width},
         {"casing_depth", s.casing_depth},
         {"lip_height", s.lip_height},
         {"spring_stiffness", s.spring_stiffness},
         {"spring_preload", s.spring_preload},
         {"traction_threshold", s.traction_threshold},
         {"contact_stiffness", s.contact_stiffness},
         {"friction_coeff", s.friction_coeff},
         {"style",
          {{"casing_color", color_to_json(s.style.casing_color)},
           {"battery_color", color_to_json(s.style.battery_color)},
           {"background_color", color_to_json(s.style.background_color)},
           {"slant_angle", s.style.slant_angle}}},
         {"object_id", s.object_id}};
  return j.dump(2);
}

}  // namespace pry::sim
