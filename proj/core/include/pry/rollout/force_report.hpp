#pragma once

#include <string>
#include <vector>

#include "pry/rollout/rollout.hpp"

namespace pry::rollout {

// Phase-aligned summary of the vertical contact force over one episode.
// |fz| is the signature channel: it reads the slot-floor reaction during
// insertion, the casing reaction during prying, and the battery load while
// lifting, so a healthy episode shows a rise to a pry peak followed by a
// sustained lifting plateau instead of a collapse to zero.
struct ForceSignature {
  int insert_steps = 0;
  int pry_steps = 0;
  int lift_steps = 0;
  double insert_mean_fz = 0.0;  // mean |fz| over insert-contact steps
  double pry_peak_fz = 0.0;     // max |fz| over pry-contact steps
  double early_mean = 0.0;      // mean |fz|, first third of insert+pry
  double late_mean = 0.0;       // mean |fz|, last third of insert+pry
  double lift_sustained_frac = 0.0;  // lift steps with |fz| >= peak/2
  double post_peak_min_frac = 0.0;   // min |fz| after global peak / peak
};

ForceSignature force_signature(const std::vector<u8>& phases,
                               const std::vector<Eigen::Vector3d>& forces);
ForceSignature force_signature(const EpisodeResult& ep);
ForceSignature force_signature(const data::Episode& ep);

// step,phase,fx,fz,fnorm — one row per simulation step.
void write_trace_csv(const std::string& path, const std::vector<u8>& phases,
                     const std::vector<Eigen::Vector3d>& forces);

}  // namespace pry::rollout
