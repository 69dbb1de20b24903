#include "pry/rollout/force_report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "pry/sim/types.hpp"

namespace pry::rollout {

namespace {

double mean(const std::vector<double>& xs, size_t lo, size_t hi) {
  if (hi <= lo) return 0.0;
  return std::accumulate(xs.begin() + i64(lo), xs.begin() + i64(hi), 0.0) /
         double(hi - lo);
}

}  // namespace

ForceSignature force_signature(const std::vector<u8>& phases,
                               const std::vector<Eigen::Vector3d>& forces) {
  require(phases.size() == forces.size(),
          "force_signature: phases/forces length mismatch");
  ForceSignature sig;
  if (phases.empty()) return sig;

  std::vector<double> contact_fz;  // |fz| over insert+pry, in time order
  std::vector<double> lift_fz;
  double insert_sum = 0.0;
  for (size_t i = 0; i < phases.size(); ++i) {
    const auto phase = static_cast<sim::Phase>(phases[i]);
    const double afz = std::abs(forces[i].z());
    if (phase == sim::Phase::kInsertContact) {
      ++sig.insert_steps;
      insert_sum += afz;
      contact_fz.push_back(afz);
    } else if (phase == sim::Phase::kPryContact) {
      ++sig.pry_steps;
      sig.pry_peak_fz = std::max(sig.pry_peak_fz, afz);
      contact_fz.push_back(afz);
    } else if (phase == sim::Phase::kLifting) {
      ++sig.lift_steps;
      lift_fz.push_back(afz);
    }
  }
  if (sig.insert_steps > 0) sig.insert_mean_fz = insert_sum / sig.insert_steps;

  if (!contact_fz.empty()) {
    const size_t third = std::max<size_t>(1, contact_fz.size() / 3);
    sig.early_mean = mean(contact_fz, 0, third);
    sig.late_mean = mean(contact_fz, contact_fz.size() - third,
                         contact_fz.size());
  }

  if (!lift_fz.empty() && sig.pry_peak_fz > 0.0) {
    int sustained = 0;
    for (double f : lift_fz)
      if (f >= 0.5 * sig.pry_peak_fz) ++sustained;
    sig.lift_sustained_frac = double(sustained) / double(lift_fz.size());
  }

  // Collapse detector over the whole trace: a policy that loses the battery
  // after the pry peak shows |fz| falling to ~0, so the post-peak minimum
  // divided by the peak goes small. No steps after the peak counts as "held".
  size_t peak_idx = 0;
  double peak = 0.0;
  for (size_t i = 0; i < forces.size(); ++i) {
    const double afz = std::abs(forces[i].z());
    if (afz > peak) {
      peak = afz;
      peak_idx = i;
    }
  }
  if (peak > 0.0) {
    double post_min = peak;
    for (size_t i = peak_idx + 1; i < forces.size(); ++i)
      post_min = std::min(post_min, std::abs(forces[i].z()));
    sig.post_peak_min_frac = post_min / peak;
  }
  return sig;
}

ForceSignature force_signature(const EpisodeResult& ep) {
  return force_signature(ep.phases, ep.forces);
}

ForceSignature force_signature(const data::Episode& ep) {
  std::vector<u8> phases;
  std::vector<Eigen::Vector3d> forces;
  phases.reserve(ep.steps.size());
  forces.reserve(ep.steps.size());
  for (const data::EpisodeStep& step : ep.steps) {
    phases.push_back(step.phase);
    forces.push_back(step.obs.force);
  }
  return force_signature(phases, forces);
}

void write_trace_csv(const std::string& path, const std::vector<u8>& phases,
                     const std::vector<Eigen::Vector3d>& forces) {
  require(phases.size() == forces.size(),
          "write_trace_csv: phases/forces length mismatch");
  std::ofstream out(path, std::ios::binary);
  require(bool(out), "cannot open trace csv for writing: " + path);
  out << "step,phase,fx,fz,fnorm\n";
  for (size_t i = 0; i < phases.size(); ++i) {
    out << i << "," << sim::phase_name(static_cast<sim::Phase>(phases[i]))
        << "," << forces[i].x() << "," << forces[i].z() << ","
        << forces[i].norm() << "\n";
  }
  require(bool(out), "short write: " + path);
}

}  // namespace pry::rollout
