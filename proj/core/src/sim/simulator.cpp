#include "pry/sim/simulator.hpp"

#include <algorithm>
#include <cmath>

namespace pry::sim {
namespace {

constexpr double kPhiEps = 1e-9;
constexpr int kBisectIters = 60;

double clamp_mag(double v, double mag) { return std::clamp(v, -mag, mag); }

}  // namespace

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::kFreeSpace: return "free_space";
    case Phase::kInsertContact: return "insert_contact";
    case Phase::kPryContact: return "pry_contact";
    case Phase::kLifting: return "lifting";
    case Phase::kDone: return "done";
    case Phase::kFailed: return "failed";
  }
  return "?";
}

u32 Events::bits() const {
  u32 b = 0;
  b |= made_contact ? 1u : 0u;
  b |= battery_freed ? 2u : 0u;
  b |= battery_slipped ? 4u : 0u;
  b |= success ? 8u : 0u;
  b |= overload ? 16u : 0u;
  b |= timeout ? 32u : 0u;
  return b;
}

Events Events::from_bits(u32 b) {
  Events e;
  e.made_contact = b & 1u;
  e.battery_freed = b & 2u;
  e.battery_slipped = b & 4u;
  e.success = b & 8u;
  e.overload = b & 16u;
  e.timeout = b & 32u;
  return e;
}

Simulator::Simulator(SceneConfig scene, SimParams params)
    : scene_(std::move(scene)), params_(params) {
  scene_.validate();
  layout_ = derive_layout(scene_, params_);
}

ToolFrame Simulator::tool_frame(const ToolPose& pose) const {
  return ToolFrame{{pose.x, pose.z}, pose.theta, params_.tool_length};
}

BatteryFrame Simulator::battery_frame(double phi, double lift) const {
  return BatteryFrame{{layout_.pivot_x, 0.0}, phi, lift};
}

SimState Simulator::reset(u64 seed) const {
  Rng rng = substream(seed, "sim.reset");
  ToolPose pose;
  const double slot_mid = 0.5 * layout_.gap;
  pose.x = slot_mid + rng.uniform(-0.005, 0.005);
  pose.z = layout_.wall_top + params_.tool_length + 0.006 +
           rng.uniform(0.0, 0.020);
  pose.theta = rng.uniform(-0.03, 0.03);
  return reset_at(pose);
}

SimState Simulator::reset_at(const ToolPose& pose) const {
  SimState s;
  s.tool = pose;
  return s;
}

double Simulator::resist_torque(double phi) const {
  // spring + gravity about the pivot; the weight acts at the center with
  // arm (L/2) cos(phi). The casing floor carries the weight only at
  // exactly phi = 0.
  return layout_.spring_torque_preload +
         layout_.spring_torque_stiffness * phi +
         layout_.battery_weight * 0.5 * layout_.length * std::cos(phi);
}

double Simulator::net_pry_torque(const ToolPose& pose, double phi,
                                 double lift) const {
  const BatteryFrame bf = battery_frame(phi, lift);
  const auto contacts =
      find_contacts(tool_frame(pose), bf, scene_, layout_, params_);
  return battery_torque(contacts, bf) -
         layout_.battery_weight * 0.5 * layout_.length * std::cos(phi);
}

double Simulator::solve_pivot(const ToolPose& pose, double prev_phi,
                              double lift) const {
  // residual g(phi) = tool torque - spring/gravity resistance; the battery
  // settles where g = 0, clamped to [fall-limited prev_phi, max_angle].
  // Warm-starting at the previous angle keeps the solver on the equilibrium
  // branch the battery is physically resting on: re-bracketing from zero
  // would let a thin tip snap through the bottom face, flipping the penalty
  // normal and teleporting the battery back down (tunneling). Unsupported
  // batteries settle back at pivot_fall_per_step per step instead.
  const auto g = [&](double phi) {
    const BatteryFrame bf = battery_frame(phi, lift);
    const auto contacts =
        find_contacts(tool_frame(pose), bf, scene_, layout_, params_);
    return battery_torque(contacts, bf) - resist_torque(phi);
  };
  const double lo_bound = std::max(0.0, prev_phi - params_.pivot_fall_per_step);
  const double hi_bound = layout_.max_angle;
  if (g(hi_bound) >= 0.0) return hi_bound;
  // Highest supported branch wins: the tool can push the battery up
  // arbitrarily fast within a step, so scan down from the top. Checking
  // g(lo_bound) alone would miss branches above a contact-free dead zone,
  // which opens up whenever the tip rises faster per step than the contact
  // envelope is thick.
  constexpr int kScan = 48;
  double lo = lo_bound, hi = hi_bound;
  bool bracketed = false;
  for (int i = 1; i <= kScan; ++i) {
    const double phi =
        hi_bound + (lo_bound - hi_bound) * double(i) / double(kScan);
    if (g(phi) >= 0.0) {
      lo = phi;
      hi = hi_bound + (lo_bound - hi_bound) * double(i - 1) / double(kScan);
      bracketed = true;
      break;
    }
  }
  if (!bracketed) return lo_bound;
  for (int i = 0; i < kBisectIters; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) >= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double Simulator::solve_lift(const ToolPose& pose, double phi,
                             double prev_lift, bool* slipped) const {
  *slipped = false;
  const double lo_bound = std::max(0.0, prev_lift - params_.slip_per_step);
  const double hi_bound = prev_lift + 0.008;
  const auto support = [&](double h) {
    const auto contacts = find_contacts(
        tool_frame(pose), battery_frame(phi, h), scene_, layout_, params_);
    return battery_support(contacts) - layout_.lift_load;
  };
  const auto slip = [&] {
    *slipped = prev_lift > 0.0;
    return lo_bound;
  };
  // carrying the battery vertically on the tilted end-of-pry face needs the
  // friction cone to contain vertical: mu >= tan(phi)
  if (scene_.friction_coeff < std::tan(phi)) return slip();
  // traction floor: grips weaker than the threshold cannot drag the battery
  if (layout_.lift_load < scene_.traction_threshold) return slip();
  if (support(hi_bound) > 0.0) return hi_bound;
  // The battery rests on the highest supported branch. Scan down from
  // hi_bound for it: when the tool rose more than the contact envelope in
  // one step, support(lo_bound) sits in the tunneled region below the
  // branch, so a single endpoint check would misreport a slip.
  constexpr int kScan = 40;
  double lo = lo_bound, hi = hi_bound;
  bool bracketed = false;
  for (int i = 1; i <= kScan; ++i) {
    const double h =
        hi_bound + (lo_bound - hi_bound) * double(i) / double(kScan);
    if (support(h) >= 0.0) {
      lo = h;
      hi = hi_bound + (lo_bound - hi_bound) * double(i - 1) / double(kScan);
      bracketed = true;
      break;
    }
  }
  if (!bracketed) return slip();
  for (int i = 0; i < kBisectIters; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (support(mid) >= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

bool Simulator::is_success(const SimState& state) const {
  return state.battery_angle >= layout_.free_angle - kPhiEps &&
         state.battery_lift >= layout_.success_height - 1e-12;
}

ForceSample Simulator::contact_force(const SimState& state) const {
  const auto contacts = find_contacts(
      tool_frame(state.tool),
      battery_frame(state.battery_angle, state.battery_lift), scene_, layout_,
      params_);
  Vec2 f{0.0, 0.0};
  for (const Contact& k : contacts) f += k.force_magnitude() * k.normal;
  const double c = std::cos(state.tool.theta);
  const double s = std::sin(state.tool.theta);
  ForceSample out;  // world -> tool frame
  out.fx = c * f.x() - s * f.y();
  out.fy = 0.0;
  out.fz = s * f.x() + c * f.y();
  return out;
}

SimState Simulator::step(const SimState& state, const ToolAction& action) const {
  if (state.phase == Phase::kDone || state.phase == Phase::kFailed)
    return state;

  SimState next = state;
  next.events = Events{};

  // --- actuation clamps ---
  double dx = action.dx, dz = action.dz;
  const double tnorm = std::hypot(dx, dz);
  if (tnorm > params_.max_step_translation) {
    const double scale = params_.max_step_translation / tnorm;
    dx *= scale;
    dz *= scale;
  }
  const double dtheta = clamp_mag(action.dtheta, params_.max_step_rotation);
  next.tool.x = state.tool.x + dx;
  next.tool.z = state.tool.z + dz;
  next.tool.theta = state.tool.theta + dtheta;

  // --- battery settles quasi-statically ---
  bool slipped = false;
  if (state.phase != Phase::kLifting) {
    next.battery_angle =
        solve_pivot(next.tool, state.battery_angle, state.battery_lift);
    next.battery_lift = state.battery_lift;
  } else {
    // once freed, the pivot angle is frozen and the battery rides the tool
    next.battery_angle = state.battery_angle;
    next.battery_lift = solve_lift(next.tool, state.battery_angle,
                                   state.battery_lift, &slipped);
  }

  // --- contact forces at the settled configuration ---
  const ToolFrame tf = tool_frame(next.tool);
  const BatteryFrame bf = battery_frame(next.battery_angle, next.battery_lift);
  const auto contacts = find_contacts(tf, bf, scene_, layout_, params_);

  Vec2 f_world{0.0, 0.0};
  const double mu = scene_.friction_coeff;
  const double v_clamp = params_.max_step_translation;
  for (const Contact& k : contacts) {
    const double fn = k.force_magnitude();
    f_world += fn * k.normal;
    // regularized Coulomb friction from this step's slide at the contact
    const Vec2 p = k.on_shaft ? k.shaft_point : k.point;
    const Vec2 r = p - Vec2{state.tool.x, state.tool.z};
    const Vec2 v_tool{dx - dtheta * r.y(), dz + dtheta * r.x()};
    Vec2 v_feature{0.0, 0.0};
    if (k.on_battery) {
      v_feature = bf.dpoint_dphi(k.battery_s, k.battery_t) *
                      (next.battery_angle - state.battery_angle) +
                  Vec2{0.0, next.battery_lift - state.battery_lift};
    }
    const Vec2 tangent{-k.normal.y(), k.normal.x()};
    const double slide = (v_tool - v_feature).dot(tangent);
    const double ratio = std::clamp(slide / v_clamp, -1.0, 1.0);
    f_world -= mu * fn * ratio * tangent;
  }

  // --- wrench in the tool frame, saturation, overload ---
  const double c = std::cos(next.tool.theta);
  const double s = std::sin(next.tool.theta);
  ForceSample sensed;
  sensed.fx = c * f_world.x() - s * f_world.y();
  sensed.fy = 0.0;
  sensed.fz = s * f_world.x() + c * f_world.y();
  const double raw_norm = std::hypot(sensed.fx, sensed.fz);
  const bool overload = raw_norm > params_.force_saturation;
  sensed.fx = clamp_mag(sensed.fx, params_.force_saturation);
  sensed.fz = clamp_mag(sensed.fz, params_.force_saturation);
  next.force = sensed;

  // --- work bookkeeping: right-endpoint torque integral over-counts the
  // path integral (torque grows with phi), keeping work >= stored energy ---
  const double dphi = next.battery_angle - state.battery_angle;
  if (dphi != 0.0) next.work_done += battery_torque(contacts, bf) * dphi;
  const double dlift = next.battery_lift - state.battery_lift;
  if (dlift != 0.0) next.work_done += battery_support(contacts) * dlift;

  // --- events (edge-triggered) ---
  const bool any_contact = !contacts.empty();
  next.events.made_contact = any_contact && state.phase == Phase::kFreeSpace;
  next.events.battery_freed =
      next.battery_angle >= layout_.free_angle - kPhiEps &&
      state.battery_angle < layout_.free_angle - kPhiEps;
  next.events.battery_slipped = slipped;
  next.events.overload = overload;

  // --- monotone phase machine ---
  Phase phase = state.phase;
  if (phase == Phase::kFreeSpace && any_contact) phase = Phase::kInsertContact;
  if (phase == Phase::kInsertContact && next.battery_angle > kPhiEps)
    phase = Phase::kPryContact;
  if (phase == Phase::kPryContact &&
      next.battery_angle >= layout_.free_angle - kPhiEps)
    phase = Phase::kLifting;
  next.phase = phase;

  next.step_count = state.step_count + 1;
  const bool success = is_success(next);
  next.events.success = success && !is_success(state);
  next.events.timeout = next.step_count >= params_.max_steps && !success;
  if (success)
    next.phase = Phase::kDone;
  else if (overload || next.events.timeout)
    next.phase = Phase::kFailed;
  return next;
}

double Simulator::force_step_bound(double eps) const {
  // Per contact, a pose change of eps moves the penetration by at most eps
  // directly plus at most ~eps again through the battery's equilibrium
  // response, and friction is bounded by mu * N with a regularization slope
  // of N / max_step_translation. The feature list caps simultaneous
  // contacts at 12. The spring term bounds the equilibrium force shift
  // k_phi * dphi / L with dphi <= eps / L.
  const double k_c = scene_.contact_stiffness;
  const double mu = scene_.friction_coeff;
  const double per_contact =
      2.0 * k_c * eps * (1.0 + mu) +
      mu * params_.force_saturation * eps / params_.max_step_translation;
  const double spring_term =
      (layout_.spring_torque_stiffness + layout_.spring_torque_preload) *
      eps / (layout_.length * layout_.length);
  return 12.0 * per_contact + spring_term;
}

}  // namespace pry::sim
