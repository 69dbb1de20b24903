#include "pry/diffusion/checkpoint.hpp"

#include <json.hpp>

#include "pry/container.hpp"
#include "pry/hashing.hpp"

namespace pry::diffusion {
namespace {

using nlohmann::json;

template <class S>
std::vector<double> widen(const nn::Tensor<S>& t) {
  return std::vector<double>(t.data.begin(), t.data.end());
}

std::vector<i64> blob_shape(const std::vector<int>& shape) {
  return std::vector<i64>(shape.begin(), shape.end());
}

template <class S>
void narrow_into(const ContainerReader& in, const std::string& name,
                 nn::Tensor<S>& dst) {
  require(in.has_array(name), "checkpoint: missing array '" + name + "'");
  const ArrayRecord& rec = in.array_record(name);
  require(rec.shape == blob_shape(dst.shape),
          "checkpoint: shape mismatch for '" + name + "'");
  std::vector<double> buf = in.read_array<double>(name);
  for (size_t i = 0; i < buf.size(); ++i) dst.data[i] = S(buf[i]);
}

}  // namespace

template <class S>
void save_checkpoint(const std::string& path, PolicyModel<S>& model,
                     nn::AdamW<S>& opt, nn::Ema<S>& ema,
                     const CheckpointMeta& meta, const ExperimentConfig& cfg,
                     const data::DatasetStats& stats) {
  json header{{"kind", "pry checkpoint"},
              {"variant", variant_name(model.variant)},
              {"epochs_done", meta.epochs_done},
              {"global_step", meta.global_step},
              {"adam_steps", opt.steps()},
              {"ema_steps", ema.steps()},
              {"rng_state", meta.rng_state},
              {"config", json::parse(config_to_json(cfg))},
              {"config_hash", hash_hex(config_hash(cfg))},
              {"stats", json::parse(data::stats_to_json(stats))}};

  ContainerWriter out(kCheckpointMagic, kCheckpointVersion);
  auto params = model.params.all();
  require(opt.size() == params.size() && ema.size() == params.size(),
          "checkpoint: optimizer/ema not bound to this model");
  for (size_t i = 0; i < params.size(); ++i) {
    const nn::Param<S>& p = *params[i];
    out.add_array("param/" + p.name, "f64", blob_shape(p.value.shape),
                  widen(p.value));
    out.add_array("ema/" + p.name, "f64", blob_shape(p.value.shape),
                  widen(ema.shadow(i)));
    const Eigen::VectorXd& m = opt.m(i);
    const Eigen::VectorXd& v = opt.v(i);
    out.add_array("adam_m/" + p.name, "f64", {i64(m.size())},
                  std::vector<double>(m.data(), m.data() + m.size()));
    out.add_array("adam_v/" + p.name, "f64", {i64(v.size())},
                  std::vector<double>(v.data(), v.data() + v.size()));
  }
  out.write(path, header.dump());
}

template <class S>
CheckpointMeta resume_checkpoint(const std::string& path,
                                 PolicyModel<S>& model, nn::AdamW<S>& opt,
                                 nn::Ema<S>& ema,
                                 const ExperimentConfig& cfg) {
  ContainerReader in(path, kCheckpointMagic, kCheckpointVersion);
  json header = json::parse(in.header_json());

  const std::string want = hash_hex(config_hash(cfg));
  const std::string have = header.at("config_hash").get<std::string>();
  require(want == have, "checkpoint: config hash mismatch (run " + want +
                            ", file " + have + ")");
  const std::string v = header.at("variant").get<std::string>();
  require(v == variant_name(model.variant),
          "checkpoint: variant mismatch (model " +
              variant_name(model.variant) + ", file " + v + ")");

  auto params = model.params.all();
  require(in.arrays().size() == 4 * params.size(),
          "checkpoint: parameter set differs from this model");
  for (size_t i = 0; i < params.size(); ++i) {
    nn::Param<S>& p = *params[i];
    narrow_into(in, "param/" + p.name, p.value);
    narrow_into(in, "ema/" + p.name, ema.shadow(i));
    for (auto [key, vec] : {std::pair{std::string("adam_m/"), &opt.m(i)},
                            std::pair{std::string("adam_v/"), &opt.v(i)}}) {
      const std::string name = key + p.name;
      require(in.has_array(name), "checkpoint: missing array '" + name + "'");
      std::vector<double> buf = in.read_array<double>(name);
      require(i64(buf.size()) == vec->size(),
              "checkpoint: moment size mismatch for '" + name + "'");
      *vec = Eigen::Map<const Eigen::VectorXd>(buf.data(), i64(buf.size()));
    }
  }
  opt.set_steps(header.at("adam_steps").get<i64>());
  ema.set_steps(header.at("ema_steps").get<i64>());

  CheckpointMeta meta;
  meta.epochs_done = header.at("epochs_done").get<int>();
  meta.global_step = header.at("global_step").get<i64>();
  meta.rng_state = header.at("rng_state").get<std::string>();
  return meta;
}

template <class S>
LoadedPolicy<S> load_policy(const std::string& path) {
  ContainerReader in(path, kCheckpointMagic, kCheckpointVersion);
  json header = json::parse(in.header_json());

  LoadedPolicy<S> out;
  out.cfg = config_from_json(header.at("config").dump());
  out.stats = data::stats_from_json(header.at("stats").dump());
  out.meta.epochs_done = header.at("epochs_done").get<int>();
  out.meta.global_step = header.at("global_step").get<i64>();
  out.meta.rng_state = header.at("rng_state").get<std::string>();
  const Variant v =
      variant_from_name(header.at("variant").get<std::string>());
  out.model = std::make_unique<PolicyModel<S>>(out.cfg, v, /*init_seed=*/0);
  for (nn::Param<S>* p : out.model->params.all())
    narrow_into(in, "ema/" + p->name, p->value);
  return out;
}

template void save_checkpoint<float>(const std::string&, PolicyModel<float>&,
                                     nn::AdamW<float>&, nn::Ema<float>&,
                                     const CheckpointMeta&,
                                     const ExperimentConfig&,
                                     const data::DatasetStats&);
template void save_checkpoint<double>(const std::string&,
                                      PolicyModel<double>&, nn::AdamW<double>&,
                                      nn::Ema<double>&, const CheckpointMeta&,
                                      const ExperimentConfig&,
                                      const data::DatasetStats&);
template CheckpointMeta resume_checkpoint<float>(const std::string&,
                                                 PolicyModel<float>&,
                                                 nn::AdamW<float>&,
                                                 nn::Ema<float>&,
                                                 const ExperimentConfig&);
template CheckpointMeta resume_checkpoint<double>(const std::string&,
                                                  PolicyModel<double>&,
                                                  nn::AdamW<double>&,
                                                  nn::Ema<double>&,
                                                  const ExperimentConfig&);
template LoadedPolicy<float> load_policy<float>(const std::string&);
template LoadedPolicy<double> load_policy<double>(const std::string&);

}  // namespace pry::diffusion
