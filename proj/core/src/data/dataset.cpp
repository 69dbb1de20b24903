#include "pry/data/dataset.hpp"

#include <algorithm>

#include <json.hpp>

#include "pry/container.hpp"
#include "pry/data/actions.hpp"
#include "pry/data/rotation6d.hpp"
#include "pry/hashing.hpp"
#include "pry/sim/scene.hpp"

namespace pry::data {
namespace {

using nlohmann::json;

constexpr char kMagic[] = "PRYDSET1";
constexpr u32 kVersion = 1;

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vec_from_json(const json& a) {
  Eigen::VectorXd v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v(static_cast<int>(i)) = a[i];
  return v;
}

}  // namespace

std::string stats_to_json(const DatasetStats& stats) {
  json j{{"action_min", vec_to_json(stats.actions.min())},
         {"action_max", vec_to_json(stats.actions.max())},
         {"pose_min", vec_to_json(stats.poses.min())},
         {"pose_max", vec_to_json(stats.poses.max())},
         {"force_norm_constant", stats.force_norm_constant}};
  return j.dump();
}

DatasetStats stats_from_json(const std::string& text) {
  json st = json::parse(text);
  DatasetStats s;
  s.actions = Normalizer(vec_from_json(st.at("action_min")),
                         vec_from_json(st.at("action_max")));
  s.poses = Normalizer(vec_from_json(st.at("pose_min")),
                       vec_from_json(st.at("pose_max")));
  s.force_norm_constant = st.at("force_norm_constant").get<double>();
  return s;
}

Vec9 pose_vector(const Vec3& position, const Mat3& rotation) {
  Vec9 p;
  p.head<3>() = position;
  p.tail<6>() = to_rot6d(rotation);
  return p;
}

i64 Dataset::total_steps() const {
  i64 n = 0;
  for (const Episode& e : episodes_) n += static_cast<i64>(e.steps.size());
  return n;
}

Dataset Dataset::build(std::vector<Episode> episodes, u64 config_hash,
                       const sim::RenderParams& render,
                       double force_norm_constant) {
  Dataset d;
  d.episodes_ = std::move(episodes);
  d.config_hash_ = config_hash;
  d.render_ = render;
  d.stats_.force_norm_constant = force_norm_constant;

  std::vector<Eigen::VectorXd> actions, poses;
  for (const Episode& e : d.episodes_)
    for (const EpisodeStep& s : e.steps) {
      actions.push_back(s.action);
      poses.push_back(pose_vector(s.obs.position, s.obs.rotation));
    }
  if (!actions.empty()) {
    d.stats_.actions = Normalizer::fit(actions);
    d.stats_.poses = Normalizer::fit(poses);
  }
  return d;
}

WindowData Dataset::window(const WindowRef& ref, int n_obs,
                           int horizon) const {
  const Episode& ep = episodes_.at(size_t(ref.episode));
  const int n = static_cast<int>(ep.steps.size());
  require(ref.t >= 0 && ref.t < n, "Dataset::window: t out of range");
  WindowData w;
  w.frames.reserve(size_t(n_obs));
  for (int i = n_obs - 1; i >= 0; --i) {
    const int t = std::max(0, ref.t - i);  // repeat-first padding
    w.frames.push_back(&ep.steps[size_t(t)].obs);
  }
  w.chunk.reserve(size_t(horizon));
  for (int i = 0; i < horizon; ++i) {
    const int t = ref.t + i;
    w.chunk.push_back(t < n ? ep.steps[size_t(t)].action : hold_action());
  }
  return w;
}

std::vector<WindowRef> Dataset::window_refs(int stride, int phase) const {
  require(stride >= 1, "window_refs: stride must be >= 1");
  std::vector<WindowRef> refs;
  for (int e = 0; e < num_episodes(); ++e) {
    const int n = static_cast<int>(episodes_[size_t(e)].steps.size());
    for (int t = phase % stride; t < n; t += stride)
      refs.push_back(WindowRef{e, t});
  }
  return refs;
}

void Dataset::save(const std::string& path) const {
  const i64 total = total_steps();
  const int h = render_.height, w = render_.width;

  std::vector<u8> images;
  images.reserve(size_t(total) * h * w * 3);
  std::vector<double> forces, positions, rotations, actions;
  std::vector<u8> phases;
  std::vector<u32> events;
  forces.reserve(size_t(total) * 3);
  positions.reserve(size_t(total) * 3);
  rotations.reserve(size_t(total) * 9);
  actions.reserve(size_t(total) * 9);

  json eps = json::array();
  for (const Episode& e : episodes_) {
    eps.push_back({{"seed", e.seed},
                   {"n_steps", e.steps.size()},
                   {"success", e.success},
                   {"outcome", e.outcome},
                   {"scene", json::parse(sim::scene_to_json(e.scene))}});
    for (const EpisodeStep& s : e.steps) {
      require(s.obs.image.height == h && s.obs.image.width == w,
              "Dataset::save: image size mismatch");
      images.insert(images.end(), s.obs.image.data.begin(),
                    s.obs.image.data.end());
      for (int i = 0; i < 3; ++i) forces.push_back(s.obs.force(i));
      for (int i = 0; i < 3; ++i) positions.push_back(s.obs.position(i));
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) rotations.push_back(s.obs.rotation(r, c));
      for (int i = 0; i < 9; ++i) actions.push_back(s.action(i));
      phases.push_back(s.phase);
      events.push_back(s.event_bits);
    }
  }

  json header{
      {"kind", "pry dataset"},
      {"meta", json::parse(meta_)},
      {"config_hash", hash_hex(config_hash_)},
      {"render",
       {{"height", render_.height},
        {"width", render_.width},
        {"view_x0", render_.view_x0},
        {"view_x1", render_.view_x1},
        {"view_z0", render_.view_z0},
        {"view_z1", render_.view_z1}}},
      {"stats", json::parse(stats_to_json(stats_))},
      {"episodes", std::move(eps)}};

  ContainerWriter out(kMagic, kVersion);
  out.add_array("images", "u8", {total, h, w, 3}, images);
  out.add_array("forces", "f64", {total, 3}, forces);
  out.add_array("positions", "f64", {total, 3}, positions);
  out.add_array("rotations", "f64", {total, 3, 3}, rotations);
  out.add_array("actions", "f64", {total, 9}, actions);
  out.add_array("phases", "u8", {total}, phases);
  out.add_array("events", "u32", {total}, events);
  out.write(path, header.dump());
}

Dataset Dataset::load(const std::string& path) {
  ContainerReader in(path, kMagic, kVersion);
  json header = json::parse(in.header_json());
  Dataset d;
  d.meta_ = header.at("meta").dump();

  const json& r = header.at("render");
  d.render_.height = r.at("height").get<int>();
  d.render_.width = r.at("width").get<int>();
  d.render_.view_x0 = r.at("view_x0").get<double>();
  d.render_.view_x1 = r.at("view_x1").get<double>();
  d.render_.view_z0 = r.at("view_z0").get<double>();
  d.render_.view_z1 = r.at("view_z1").get<double>();

  d.stats_ = stats_from_json(header.at("stats").dump());
  d.config_hash_ = std::stoull(header.at("config_hash").get<std::string>(),
                               nullptr, 16);

  const auto images = in.read_array<u8>("images");
  const auto forces = in.read_array<double>("forces");
  const auto positions = in.read_array<double>("positions");
  const auto rotations = in.read_array<double>("rotations");
  const auto actions = in.read_array<double>("actions");
  const auto phases = in.read_array<u8>("phases");
  const auto events = in.read_array<u32>("events");

  const int h = d.render_.height, w = d.render_.width;
  const size_t px = size_t(h) * w * 3;
  size_t at = 0;
  for (const json& em : header.at("episodes")) {
    Episode e;
    e.seed = em.at("seed").get<u64>();
    e.success = em.at("success").get<bool>();
    e.outcome = em.at("outcome").get<std::string>();
    e.scene = sim::scene_from_json(em.at("scene").dump());
    const size_t n = em.at("n_steps").get<size_t>();
    e.steps.resize(n);
    for (size_t t = 0; t < n; ++t, ++at) {
      EpisodeStep& s = e.steps[t];
      s.obs.image = Image8(h, w);
      require(at * px + px <= images.size(),
              "dataset: image array shorter than episode index");
      std::copy_n(images.begin() + at * px, px, s.obs.image.data.begin());
      for (int i = 0; i < 3; ++i) s.obs.force(i) = forces.at(at * 3 + i);
      for (int i = 0; i < 3; ++i)
        s.obs.position(i) = positions.at(at * 3 + i);
      for (int rr = 0; rr < 3; ++rr)
        for (int cc = 0; cc < 3; ++cc)
          s.obs.rotation(rr, cc) = rotations.at(at * 9 + rr * 3 + cc);
      for (int i = 0; i < 9; ++i) s.action(i) = actions.at(at * 9 + i);
      s.phase = phases.at(at);
      s.event_bits = events.at(at);
    }
    d.episodes_.push_back(std::move(e));
  }
  require(at * px == images.size(),
          "dataset: image array longer than episode index");
  return d;
}

}  // namespace pry::data
