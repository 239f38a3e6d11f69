#pragma once

// Closed-loop time integration: explicit Euler on the 3(N+1) node values,
// every node renormalized onto the sphere after each step.
//
// The state can be carried in three frames, all exactly equivalent in
// continuous time:
//   * driftless (default): M2 = exp(sigma omega S) P(t) M. Its dynamics have
//     no free-precession term, so zero controls leave the state untouched.
//   * rotating: M1 = P(t) M, which is continuous across the pi impulses but
//     keeps the drift eps(t) omega e3 ∧ M1. Euler plus renormalization on that
//     drift shrinks the e3 component every step in both precession senses, so
//     the error accumulates instead of refocusing.
//   * lab: M itself, stepped with the alternating second control and hit by an
//     explicit pi rotation about e1 after each step that lands on t = kT. Used
//     to cross-check the rotating frame.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "bloch/control_law.hpp"
#include "bloch/error.hpp"
#include "bloch/geometry.hpp"
#include "bloch/omega_grid.hpp"
#include "bloch/rotation_field.hpp"

namespace bloch {

enum class Integrator {
  driftless,  ///< explicit Euler on M2 (drift removed analytically)
  euler,      ///< explicit Euler on M1 including the drift term
};

enum class StateFrame { lab, rotating, driftless };

struct SimConfig {
  OmegaGrid grid{0.0, 1.0, 100};
  double period = 2.0 * std::numbers::pi;
  std::int64_t steps_per_period = 1000;
  std::int64_t n_periods = 20;
  Integrator integrator = Integrator::driftless;
  FeedbackForm feedback = FeedbackForm::gradient;
  std::int64_t record_stride = 10;
  bool lab_frame_check = false;

  double step() const { return period / static_cast<double>(steps_per_period); }
  double final_time() const { return static_cast<double>(n_periods) * period; }
  std::int64_t total_steps() const { return n_periods * steps_per_period; }
  StepSchedule schedule() const { return {period, steps_per_period}; }

  void validate() const {
    std::vector<std::string> bad;
    if (!(period > 0.0) || !std::isfinite(period)) bad.emplace_back("period must be > 0");
    if (steps_per_period < 1) bad.emplace_back("steps_per_period must be >= 1 (step must divide the period)");
    if (n_periods < 1) bad.emplace_back("n_periods must be >= 1 (final time a positive multiple of the period)");
    if (record_stride < 1) bad.emplace_back("record_stride must be >= 1");
    if (grid.size() < 3) bad.emplace_back("grid needs at least 3 nodes");
    if (lab_frame_check && integrator != Integrator::euler) {
      bad.emplace_back("lab_frame_check requires the euler integrator");
    }
    if (!bad.empty()) {
      std::string msg = "invalid simulation config:";
      for (const auto& b : bad) msg += " " + b + ";";
      throw config_error(msg);
    }
  }
};

/// Initial profile, target profile and the flattening rotation field.
struct Problem {
  SpinProfile initial;
  SpinProfile target;
  RotationField rotation;

  void validate(const OmegaGrid& grid) const {
    require_same_grid(initial.grid, grid, "problem(initial)");
    require_same_grid(target.grid, grid, "problem(target)");
    require_same_grid(rotation.grid, grid, "problem(rotation)");
    if (initial.size() != grid.size() || target.size() != grid.size() || rotation.size() != grid.size()) {
      throw config_error("problem: sample counts do not match the grid");
    }
    if (!on_sphere(initial)) throw config_error("problem: initial profile is off the unit sphere");
    if (!on_sphere(target)) throw config_error("problem: target profile is off the unit sphere");
    if (!rotation.dmats) throw config_error("problem: rotation field carries no derivative");
    for (std::size_t i = 0; i < rotation.size(); ++i) {
      if (!is_rotation(rotation.mats[i], 1e-10)) {
        throw config_error("problem: rotation field entry " + std::to_string(i) + " is not a rotation");
      }
    }
  }
};

struct SimState {
  std::int64_t step = 0;
  double t = 0.0;
  SpinProfile m;  ///< magnetization expressed in `frame`
  StateFrame frame = StateFrame::rotating;
};

inline StateFrame frame_for(Integrator integrator) {
  return integrator == Integrator::euler ? StateFrame::rotating : StateFrame::driftless;
}

/// State at t = 0 (all frames coincide there).
inline SimState initial_state(const SpinProfile& m0, StateFrame frame) { return SimState{0, 0.0, m0, frame}; }

/// M1 = P(t) M, P = diag(1, eps, eps).
inline SpinProfile rotating_profile(const SimState& s, const StepSchedule& sched) {
  switch (s.frame) {
    case StateFrame::rotating: return s.m;
    case StateFrame::lab: {
      if (sched.epsilon(s.step) > 0) return s.m;
      SpinProfile out = s.m;
      for (Vec3& v : out.values) v = {v.x, -v.y, -v.z};
      return out;
    }
    case StateFrame::driftless: {
      const double sigma = sched.sigma(s.step);
      SpinProfile out = s.m;
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = exp_sigma_omega_S(-sigma * out.grid.node(i)) * s.m[i];
      }
      return out;
    }
  }
  return s.m;
}

/// N = R exp(sigma omega S) M1, the frame in which the target is -e3.
inline SpinProfile to_n_frame(const SimState& s, const StepSchedule& sched, const RotationField& r) {
  SpinProfile out = s.m;
  if (s.frame == StateFrame::driftless) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = r.mats[i] * s.m[i];
    return out;
  }
  const SpinProfile m1 = rotating_profile(s, sched);
  const double sigma = sched.sigma(s.step);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = r.mats[i] * (exp_sigma_omega_S(sigma * out.grid.node(i)) * m1[i]);
  }
  return out;
}

/// Lab-frame magnetization M = P(t) M1. On [2kT, (2k+1)T) this is M1 unchanged.
inline SpinProfile reconstruct_lab(const SimState& s, const StepSchedule& sched) {
  if (s.frame == StateFrame::lab) return s.m;
  SpinProfile m1 = rotating_profile(s, sched);
  if (sched.epsilon(s.step) > 0) return m1;
  for (Vec3& v : m1.values) v = {v.x, -v.y, -v.z};
  return m1;
}

inline Controls controls_at(const SimState& s, const StepSchedule& sched, const RotationField& r,
                            FeedbackForm form = FeedbackForm::gradient) {
  const FrameField frame = frame_at_sigma(sched.sigma(s.step), s.t, r);
  return feedback(s.t, to_n_frame(s, sched, r), frame, form);
}

/// One explicit Euler step of size h with controls held at `u`, followed by
/// node-wise renormalization (and the pi impulse, in the lab frame).
inline SimState step(const SimState& s, const StepSchedule& sched, const Controls& u) {
  const double h = sched.step();
  const int eps = sched.epsilon(s.step);
  const OmegaGrid& grid = s.m.grid;
  SimState next{s.step + 1, sched.time(s.step + 1), s.m, s.frame};

  std::optional<Mat3> impulse;
  if (s.frame == StateFrame::lab && sched.impulse_at(next.step)) impulse = rot_about_e1(std::numbers::pi);
  const double sigma = sched.sigma(s.step);

  for (std::size_t i = 0; i < s.m.size(); ++i) {
    const double w = grid.node(i);
    const Vec3& m = s.m[i];
    Vec3 axis;
    switch (s.frame) {
      case StateFrame::rotating: axis = {u.u1, u.u2, eps * w}; break;
      case StateFrame::lab: axis = {u.u1, eps * u.u2, w}; break;
      case StateFrame::driftless: {
        const Mat3 e = exp_sigma_omega_S(sigma * w);
        axis = u.u1 * e.col(0) + u.u2 * e.col(1);
        break;
      }
    }
    try {
      Vec3 v = renormalize(m + h * wedge(axis, m));
      if (impulse) v = *impulse * v;
      next.m[i] = v;
    } catch (const DegenerateState&) {
      throw numeric_error("integration collapsed at step " + std::to_string(s.step) + ", node " +
                          std::to_string(i) + " (step size too large)");
    }
  }
  return next;
}

/// Computes the feedback from the pre-step state, then steps.
inline SimState step(const SimState& s, const StepSchedule& sched, const RotationField& r) {
  return step(s, sched, controls_at(s, sched, r));
}

struct TrajectoryRecord {
  double t = 0.0;
  double lyapunov = 0.0;
  double u1 = 0.0;
  double u2 = 0.0;
  std::optional<double> linf_to_target;  ///< lab frame vs M_f, only at t = 2kT
  double l2_to_minus_e3 = 0.0;           ///< N frame
};

struct SimSummary {
  double lyapunov_initial = 0.0;
  double lyapunov_final = 0.0;
  double u1_min = 0.0, u1_max = 0.0;
  double u2_min = 0.0, u2_max = 0.0;
  std::int64_t steps = 0;
  double wall_seconds = 0.0;
  std::optional<double> lab_frame_max_delta;  ///< set when the impulse cross-check ran
};

struct SimResult {
  std::vector<TrajectoryRecord> records;
  SpinProfile initial_lab;
  SpinProfile final_lab;
  SpinProfile final_n;
  SimSummary summary;

  /// (k, |M(2kT) − M_f|_inf) for every recorded echo time.
  std::vector<std::pair<std::int64_t, double>> echo_distances(double period) const {
    std::vector<std::pair<std::int64_t, double>> out;
    for (const auto& rec : records) {
      if (rec.linf_to_target) out.emplace_back(std::llround(rec.t / (2.0 * period)), *rec.linf_to_target);
    }
    return out;
  }
};

/// Optional per-step observer: called with the pre-step state and the controls
/// about to be applied (and once more with the final state).
using StepObserver = std::function<void(const SimState&, const Controls&)>;

inline SimResult run(const SimConfig& config, const Problem& problem, const StepObserver& observer = {}) {
  config.validate();
  problem.validate(config.grid);
  const auto wall_start = std::chrono::steady_clock::now();
  const StepSchedule sched = config.schedule();
  const RotationField& r = problem.rotation;
  const SpinProfile minus_e3 = constant_profile(config.grid, -e3);

  SimResult result;
  SimState state = initial_state(problem.initial, frame_for(config.integrator));
  std::optional<SimState> lab;
  if (config.lab_frame_check) {
    lab = initial_state(problem.initial, StateFrame::lab);
    result.summary.lab_frame_max_delta = 0.0;
  }
  result.initial_lab = reconstruct_lab(state, sched);

  const std::int64_t total = config.total_steps();
  double u1_min = std::numeric_limits<double>::infinity(), u1_max = -u1_min;
  double u2_min = u1_min, u2_max = u1_max;

  for (std::int64_t n = 0;; ++n) {
    const SpinProfile n_prof = to_n_frame(state, sched, r);
    const Controls u = feedback(state.t, n_prof, frame_at_sigma(sched.sigma(n), state.t, r), config.feedback);
    if (observer) observer(state, u);
    u1_min = std::min(u1_min, u.u1);
    u1_max = std::max(u1_max, u.u1);
    u2_min = std::min(u2_min, u.u2);
    u2_max = std::max(u2_max, u.u2);

    const bool echo = sched.is_echo(n);
    if (n % config.record_stride == 0 || echo || n == total) {
      TrajectoryRecord rec;
      rec.t = state.t;
      rec.lyapunov = lyapunov(n_prof);
      rec.u1 = u.u1;
      rec.u2 = u.u2;
      rec.l2_to_minus_e3 = norms(n_prof, minus_e3).l2;
      if (echo) rec.linf_to_target = norms(reconstruct_lab(state, sched), problem.target).linf;
      result.records.push_back(rec);
    }
    if (lab && echo) {
      const double d = norms(lab->m, reconstruct_lab(state, sched)).linf;
      result.summary.lab_frame_max_delta = std::max(*result.summary.lab_frame_max_delta, d);
    }
    if (n == total) {
      result.final_n = n_prof;
      break;
    }

    if (lab) lab = step(*lab, sched, controls_at(*lab, sched, r, config.feedback));
    state = step(state, sched, u);
  }

  result.final_lab = reconstruct_lab(state, sched);
  result.summary.lyapunov_initial = result.records.front().lyapunov;
  result.summary.lyapunov_final = result.records.back().lyapunov;
  result.summary.u1_min = u1_min;
  result.summary.u1_max = u1_max;
  result.summary.u2_min = u2_min;
  result.summary.u2_max = u2_max;
  result.summary.steps = total;
  result.summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return result;
}

}  // namespace bloch
