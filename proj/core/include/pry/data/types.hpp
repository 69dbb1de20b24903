#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "pry/image.hpp"
#include "pry/sim/scene.hpp"
#include "pry/sim/types.hpp"

namespace pry::data {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec9 = Eigen::Matrix<double, 9, 1>;

// What a policy sees at one timestep. Force is the raw sensed wrench
// (newtons, tool frame, saturated); normalization and augmentation happen
// downstream so the dataset stays lossless.
struct Observation {
  Image8 image;
  Vec3 force = Vec3::Zero();
  Vec3 position = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
};

// 9-dim proprioception: position plus the 6D rotation representation.
Vec9 pose_vector(const Vec3& position, const Mat3& rotation);

struct EpisodeStep {
  Observation obs;
  Vec9 action = Vec9::Zero();  // delta to the next pose
  u8 phase = 0;
  u32 event_bits = 0;
};

struct Episode {
  sim::SceneConfig scene;
  u64 seed = 0;
  bool success = false;
  std::string outcome;  // final phase name or failure tag
  std::vector<EpisodeStep> steps;
};

}  // namespace pry::data
