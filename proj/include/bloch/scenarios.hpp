#pragma once

// Built-in experiments. Each scenario supplies profile generators plus grid
// and timing defaults; a run config may override any of them.

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>

#include "bloch/geometry.hpp"
#include "bloch/omega_grid.hpp"
#include "bloch/rotation_field.hpp"
#include "bloch/simulator.hpp"

namespace bloch {

struct Scenario {
  std::string name;
  std::function<Vec3(double)> initial;
  std::function<Vec3(double)> target;
  std::optional<Mat3> rotation_override;  ///< constant R used instead of a construction
  double omega_lo = 0.0;
  double omega_hi = 1.0;
  int n_cells = 100;
  std::int64_t steps_per_period = 1000;
  std::int64_t n_periods = 20;
  Integrator integrator = Integrator::driftless;

  /// Default period couples to the band: T = 2 pi / (omega_hi - omega_lo).
  double default_period() const { return 2.0 * std::numbers::pi / (omega_hi - omega_lo); }

  SimConfig default_config() const {
    SimConfig c;
    c.grid = OmegaGrid(omega_lo, omega_hi, n_cells);
    c.period = default_period();
    c.steps_per_period = steps_per_period;
    c.n_periods = n_periods;
    c.integrator = integrator;
    return c;
  }
};

namespace detail {

/// Unit vector with the given z and the remaining weight on one axis.
inline Vec3 from_z_on_y(double z) { return {0.0, -std::sqrt(1.0 - z * z), z}; }
inline Vec3 from_z_on_x(double z) { return {-std::sqrt(1.0 - z * z), 0.0, z}; }

}  // namespace detail

inline double reference_initial_z(double w) {
  using std::numbers::pi;
  return -std::cos(pi / 8) + 0.05 * (1.0 - std::cos(pi / 8) * std::cos(w * pi / 2));
}

inline double reference_target_z(double w) {
  using std::numbers::pi;
  return -std::cos(pi / 16) + 0.1 * (1.0 - std::cos(pi / 16) * std::sin(w * pi / 4));
}

/// Band [0, 1], 100 cells, T = 2 pi, h = T/1000, T_f = 20 T; both profiles lie
/// in the southern hemisphere.
inline Scenario reference_scenario() {
  Scenario s;
  s.name = "reference";
  s.initial = [](double w) { return detail::from_z_on_y(reference_initial_z(w)); };
  s.target = [](double w) { return detail::from_z_on_x(reference_target_z(w)); };
  return s;
}

/// Reference target, started exactly on target (N(0) = -e3).
inline Scenario equilibrium_scenario() {
  Scenario s = reference_scenario();
  s.name = "equilibrium";
  s.initial = s.target;
  return s;
}

/// The constant rotation sending e1 to -e3 used by the equator counterexample.
inline constexpr Mat3 equator_rotation{{0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0}};

/// Target M_f = e1 sits on the equator. With R = equator_rotation, any
/// constant N(0) in span(e2, e3) produces zero feedback forever, so the
/// state never moves toward the target. N(0) = (0, sin(2pi/3), cos(2pi/3)).
inline Scenario equator_scenario() {
  Scenario s;
  s.name = "equator";
  const Vec3 n0{0.0, std::sin(2.0 * std::numbers::pi / 3.0), std::cos(2.0 * std::numbers::pi / 3.0)};
  const Vec3 m0 = transpose(equator_rotation) * n0;
  s.initial = [m0](double) { return m0; };
  s.target = [](double) { return e1; };
  s.rotation_override = equator_rotation;
  return s;
}

inline std::optional<Scenario> scenario_by_name(const std::string& name) {
  if (name == "reference") return reference_scenario();
  if (name == "equator") return equator_scenario();
  if (name == "equilibrium") return equilibrium_scenario();
  return std::nullopt;
}

/// Samples the scenario on `grid` and builds (or overrides) the rotation field.
inline Problem make_problem(const Scenario& s, const OmegaGrid& grid, RotationMethod method) {
  Problem p;
  p.initial = sample_profile(grid, s.initial);
  p.target = sample_profile(grid, s.target);
  p.rotation = s.rotation_override ? constant_field(grid, *s.rotation_override)
                                   : build_rotation_field(p.target, method);
  return p;
}

}  // namespace bloch
