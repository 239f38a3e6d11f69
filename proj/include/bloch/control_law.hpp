#pragma once

// Periodic frame functions, the moving frame F(t, omega) = R(omega) exp(sigma(t) omega S),
// and the Lyapunov feedback u_i = -H_i[t, N].
//
// The impulse train flips the sense of free precession every period T. In the
// rotating frame this shows up as a sign eps(t) = (-1)^floor(t/T) on the drift,
// and sigma(t) = ∫_0^t eps is a triangle wave that vanishes at every t = 2kT.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "bloch/error.hpp"
#include "bloch/geometry.hpp"
#include "bloch/omega_grid.hpp"
#include "bloch/rotation_field.hpp"

namespace bloch {

class ControlClock {
 public:
  explicit ControlClock(double period) : period_(period) {
    if (!(period > 0.0) || !std::isfinite(period)) throw config_error("clock: period must be > 0");
  }

  double period() const { return period_; }

  /// Index k of the period [kT, (k+1)T) containing t. Times within a few ulps
  /// of a boundary are treated as lying on it.
  std::int64_t period_index(double t) const {
    if (auto k = boundary_index(t)) return *k;
    return static_cast<std::int64_t>(std::floor(t / period_));
  }

  bool on_period_boundary(double t) const { return boundary_index(t).has_value(); }

  /// +1 on [2kT, (2k+1)T), -1 on [(2k+1)T, (2k+2)T).
  int epsilon(double t) const { return period_index(t) % 2 == 0 ? 1 : -1; }

  /// Closed-form ∫_0^t eps(s) ds; exactly 0 at t = 2kT and T at t = (2k+1)T.
  double sigma(double t) const {
    if (auto k = boundary_index(t)) return *k % 2 == 0 ? 0.0 : period_;
    const double tau = std::fmod(t, 2.0 * period_);
    return tau <= period_ ? tau : 2.0 * period_ - tau;
  }

 private:
  std::optional<std::int64_t> boundary_index(double t) const {
    const double k = std::round(t / period_);
    const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), period_);
    if (std::abs(t - k * period_) <= slack) return static_cast<std::int64_t>(k);
    return std::nullopt;
  }

  double period_;
};

/// Integer-indexed time axis with steps_per_period steps of size T / steps_per_period.
/// eps and sigma are evaluated from the step index, so period boundaries are exact.
class StepSchedule {
 public:
  StepSchedule(double period, std::int64_t steps_per_period)
      : clock_(period), steps_per_period_(steps_per_period) {
    if (steps_per_period < 1) throw config_error("schedule: steps_per_period must be >= 1");
    step_ = period / static_cast<double>(steps_per_period);
  }

  const ControlClock& clock() const { return clock_; }
  double period() const { return clock_.period(); }
  std::int64_t steps_per_period() const { return steps_per_period_; }
  double step() const { return step_; }

  double time(std::int64_t n) const { return static_cast<double>(n) * step_; }

  int epsilon(std::int64_t n) const { return (n / steps_per_period_) % 2 == 0 ? 1 : -1; }

  double sigma(std::int64_t n) const {
    const std::int64_t tau = n % (2 * steps_per_period_);
    const std::int64_t tri = tau <= steps_per_period_ ? tau : 2 * steps_per_period_ - tau;
    return static_cast<double>(tri) * step_;
  }

  /// A pi impulse about e1 fires on arrival at every t = kT, k >= 1.
  bool impulse_at(std::int64_t n) const { return n > 0 && n % steps_per_period_ == 0; }

  /// t = 2kT: the lab and rotating frames coincide and sigma vanishes.
  bool is_echo(std::int64_t n) const { return n % (2 * steps_per_period_) == 0; }

 private:
  ControlClock clock_;
  std::int64_t steps_per_period_;
  double step_;
};

struct FrameField {
  OmegaGrid grid;
  std::vector<Mat3> f_mats;   ///< F(t, omega_i)
  std::vector<Mat3> df_mats;  ///< dF/domega(t, omega_i)
  double at_time = 0.0;
};

/// F = R exp(sigma omega S), dF/domega = R' exp(sigma omega S) + sigma R S exp(sigma omega S).
inline FrameField frame_at_sigma(double sigma, double t, const RotationField& r) {
  if (!r.dmats) throw config_error("frame_at: rotation field carries no derivative");
  const std::vector<Mat3>& dr = *r.dmats;
  FrameField out{r.grid, std::vector<Mat3>(r.size()), std::vector<Mat3>(r.size()), t};
  for (std::size_t i = 0; i < r.size(); ++i) {
    const Mat3 e = exp_sigma_omega_S(sigma * r.grid.node(i));
    out.f_mats[i] = r.mats[i] * e;
    out.df_mats[i] = dr[i] * e + sigma * (r.mats[i] * (precession_generator * e));
  }
  return out;
}

inline FrameField frame_at(const ControlClock& clock, double t, const RotationField& r) {
  return frame_at_sigma(clock.sigma(t), t, r);
}

struct Controls {
  double u1 = 0.0;
  double u2 = 0.0;
};

/// How H_i is evaluated on the grid. Both forms discretize
///   H_i[t, N] = ∫ <N', (dF/domega e_i) ∧ N> + <e3, (F e_i) ∧ N> domega.
enum class FeedbackForm {
  /// ∫ <D N, D((F e_i) ∧ N)> + <e3, (F e_i) ∧ N>: the exact gradient of the
  /// discrete L along the node-wise N dynamics, so dL/dt = -(u1² + u2²) holds
  /// on the grid. The continuum forms agree because <N', a ∧ N'> = 0.
  gradient,
  /// The formula above term by term, using dF/domega. Differs from the
  /// discrete gradient by O(h_omega²) since D does not obey the product rule.
  frame_derivative,
};

/// u_i = -H_i, which gives dL/dt = -(u1² + u2²) along the N dynamics
/// dN/dt = sum_i u_i (F e_i) ∧ N.
inline Controls feedback(double t, const SpinProfile& n_prof, const FrameField& frame,
                         FeedbackForm form = FeedbackForm::gradient) {
  require_same_grid(n_prof.grid, frame.grid, "feedback");
  if (frame.at_time != t) throw config_error("feedback: frame evaluated at a different time");
  const std::size_t n = n_prof.size();
  const std::vector<Vec3> dn = derivative(n_prof);
  std::vector<double> h1(n), h2(n);
  if (form == FeedbackForm::gradient) {
    std::vector<Vec3> v1(n), v2(n);
    for (std::size_t k = 0; k < n; ++k) {
      v1[k] = wedge(frame.f_mats[k].col(0), n_prof[k]);
      v2[k] = wedge(frame.f_mats[k].col(1), n_prof[k]);
    }
    const std::vector<Vec3> dv1 = finite_difference<Vec3>(n_prof.grid, v1);
    const std::vector<Vec3> dv2 = finite_difference<Vec3>(n_prof.grid, v2);
    for (std::size_t k = 0; k < n; ++k) {
      h1[k] = dot(dn[k], dv1[k]) + v1[k].z;
      h2[k] = dot(dn[k], dv2[k]) + v2[k].z;
    }
  } else {
    for (std::size_t k = 0; k < n; ++k) {
      const Mat3& f = frame.f_mats[k];
      const Mat3& df = frame.df_mats[k];
      h1[k] = dot(dn[k], wedge(df.col(0), n_prof[k])) + wedge(f.col(0), n_prof[k]).z;
      h2[k] = dot(dn[k], wedge(df.col(1), n_prof[k])) + wedge(f.col(1), n_prof[k]).z;
    }
  }
  return {-integrate(h1, n_prof.grid), -integrate(h2, n_prof.grid)};
}

struct LabControls {
  double u1 = 0.0;
  double u2 = 0.0;
  bool impulse_pending = false;
};

/// Smooth lab-frame controls for rotating-frame controls (u1, u2): the second
/// control alternates sign with eps(t); a pi impulse about e1 fires at t = kT, k >= 1.
inline LabControls lab_controls(const ControlClock& clock, double t, double u1, double u2) {
  return {u1, clock.epsilon(t) * u2, t > 0.0 && clock.on_period_boundary(t)};
}

}  // namespace bloch
