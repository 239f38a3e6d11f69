#pragma once

// Run configuration: "key = value" lines, '#' starts a comment.
//
//   scenario              reference | equator | equilibrium | custom   (required)
//   grid.omega_lo         real
//   grid.omega_hi         real
//   grid.n_cells          integer
//   timing.period         real; default 2 pi / (omega_hi - omega_lo)
//   timing.steps_per_period  integer      } one of these two; step must
//   timing.step              real         } divide the period exactly
//   timing.periods        integer         } one of these two; final time
//   timing.final_time     real            } must be a multiple of the period
//   integrator            driftless | euler
//   feedback              gradient | frame_derivative
//   rotation.method       sweep | ode
//   profiles.initial      path to profile CSV   (required for custom)
//   profiles.target       path to profile CSV   (required for custom)
//   profiles.rotation     path to rotation CSV  (overrides rotation.method)
//   output.dir            directory
//   output.stride         integer (record every k steps)
//   check.lab_frame       true | false
//
// Unset keys fall back to the selected scenario's defaults.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "bloch/error.hpp"
#include "bloch/io.hpp"
#include "bloch/rotation_field.hpp"
#include "bloch/scenarios.hpp"
#include "bloch/simulator.hpp"

namespace bloch {

inline std::string to_string(Integrator i) { return i == Integrator::euler ? "euler" : "driftless"; }
inline std::string to_string(RotationMethod m) { return m == RotationMethod::ode ? "ode" : "sweep"; }
inline std::string to_string(FeedbackForm f) {
  return f == FeedbackForm::frame_derivative ? "frame_derivative" : "gradient";
}

inline std::optional<Integrator> parse_integrator(const std::string& s) {
  if (s == "euler") return Integrator::euler;
  if (s == "driftless") return Integrator::driftless;
  return std::nullopt;
}

inline std::optional<FeedbackForm> parse_feedback(const std::string& s) {
  if (s == "gradient") return FeedbackForm::gradient;
  if (s == "frame_derivative") return FeedbackForm::frame_derivative;
  return std::nullopt;
}

inline std::optional<RotationMethod> parse_method(const std::string& s) {
  if (s == "sweep") return RotationMethod::sweep;
  if (s == "ode") return RotationMethod::ode;
  return std::nullopt;
}

struct RunConfig {
  std::string scenario;
  std::optional<double> omega_lo, omega_hi;
  std::optional<std::int64_t> n_cells;
  std::optional<double> period;
  std::optional<std::int64_t> steps_per_period;
  std::optional<double> step;
  std::optional<std::int64_t> periods;
  std::optional<double> final_time;
  std::optional<Integrator> integrator;
  std::optional<FeedbackForm> feedback;
  std::optional<RotationMethod> method;
  std::optional<std::string> initial_path, target_path, rotation_path;
  std::optional<std::string> out_dir;
  std::optional<std::int64_t> stride;
  std::optional<bool> lab_frame_check;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> to_real(const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out)) return std::nullopt;
  return out;
}

inline std::optional<std::int64_t> to_int(const std::string& v) {
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) return std::nullopt;
  return out;
}

/// Integer ratio a / b, or nullopt if it is not an integer to 1e-9 relative.
inline std::optional<std::int64_t> exact_ratio(double a, double b) {
  const double q = a / b;
  const double r = std::round(q);
  if (r < 1.0 || std::abs(q - r) > 1e-9 * r) return std::nullopt;
  return static_cast<std::int64_t>(r);
}

}  // namespace detail

inline RunConfig parse_run_config(std::istream& in, const std::string& source = "config") {
  RunConfig c;
  std::vector<std::string> errors;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(line_no);
    if (eq == std::string::npos) {
      errors.push_back(where + ": expected 'key = value'");
      continue;
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));

    auto real = [&](std::optional<double>& slot) {
      if (auto v = detail::to_real(val)) slot = *v;
      else errors.push_back(where + ": " + key + " must be a real, got '" + val + "'");
    };
    auto integer = [&](std::optional<std::int64_t>& slot) {
      if (auto v = detail::to_int(val)) slot = *v;
      else errors.push_back(where + ": " + key + " must be an integer, got '" + val + "'");
    };

    if (key == "scenario") c.scenario = val;
    else if (key == "grid.omega_lo") real(c.omega_lo);
    else if (key == "grid.omega_hi") real(c.omega_hi);
    else if (key == "grid.n_cells") integer(c.n_cells);
    else if (key == "timing.period") real(c.period);
    else if (key == "timing.steps_per_period") integer(c.steps_per_period);
    else if (key == "timing.step") real(c.step);
    else if (key == "timing.periods") integer(c.periods);
    else if (key == "timing.final_time") real(c.final_time);
    else if (key == "integrator") {
      if (auto v = parse_integrator(val)) c.integrator = *v;
      else errors.push_back(where + ": integrator must be driftless or euler");
    } else if (key == "feedback") {
      if (auto v = parse_feedback(val)) c.feedback = *v;
      else errors.push_back(where + ": feedback must be gradient or frame_derivative");
    } else if (key == "rotation.method") {
      if (auto v = parse_method(val)) c.method = *v;
      else errors.push_back(where + ": rotation.method must be sweep or ode");
    } else if (key == "profiles.initial") c.initial_path = val;
    else if (key == "profiles.target") c.target_path = val;
    else if (key == "profiles.rotation") c.rotation_path = val;
    else if (key == "output.dir") c.out_dir = val;
    else if (key == "output.stride") integer(c.stride);
    else if (key == "check.lab_frame") {
      if (val == "true") c.lab_frame_check = true;
      else if (val == "false") c.lab_frame_check = false;
      else errors.push_back(where + ": check.lab_frame must be true or false");
    } else {
      errors.push_back(where + ": unknown key '" + key + "'");
    }
  }
  if (c.scenario.empty()) errors.push_back(source + ": missing required key 'scenario'");
  if (!errors.empty()) {
    std::string msg = "invalid config (" + std::to_string(errors.size()) + " problem(s)):";
    for (const auto& e : errors) msg += " [" + e + "]";
    throw config_error(msg);
  }
  return c;
}

inline RunConfig parse_run_config(const std::string& text) {
  std::istringstream in(text);
  return parse_run_config(in);
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in = detail::open_for_read(path);
  return parse_run_config(in, path.string());
}

inline std::string serialize(const RunConfig& c) {
  std::ostringstream out;
  out << "scenario = " << c.scenario << '\n';
  auto put = [&](const char* key, const auto& slot) {
    if (!slot) return;
    using V = std::decay_t<decltype(*slot)>;
    out << key << " = ";
    if constexpr (std::is_same_v<V, double>) out << format_real(*slot);
    else if constexpr (std::is_same_v<V, bool>) out << (*slot ? "true" : "false");
    else if constexpr (std::is_same_v<V, Integrator> || std::is_same_v<V, RotationMethod> ||
                       std::is_same_v<V, FeedbackForm>) {
      out << to_string(*slot);
    }
    else out << *slot;
    out << '\n';
  };
  put("grid.omega_lo", c.omega_lo);
  put("grid.omega_hi", c.omega_hi);
  put("grid.n_cells", c.n_cells);
  put("timing.period", c.period);
  put("timing.steps_per_period", c.steps_per_period);
  put("timing.step", c.step);
  put("timing.periods", c.periods);
  put("timing.final_time", c.final_time);
  put("integrator", c.integrator);
  put("feedback", c.feedback);
  put("rotation.method", c.method);
  put("profiles.initial", c.initial_path);
  put("profiles.target", c.target_path);
  put("profiles.rotation", c.rotation_path);
  put("output.dir", c.out_dir);
  put("output.stride", c.stride);
  put("check.lab_frame", c.lab_frame_check);
  return out.str();
}

/// A fully resolved run: numerics, profiles and rotation field.
struct ResolvedRun {
  std::string scenario;
  SimConfig sim;
  Problem problem;
  RotationMethod method = RotationMethod::sweep;
  std::filesystem::path out_dir = "out";
  std::vector<std::string> warnings;
};

/// Applies the config on top of the scenario defaults, loads any profile files
/// and builds the rotation field. Every violated constraint is reported in one
/// config error.
inline ResolvedRun resolve(const RunConfig& c) {
  ResolvedRun run;
  run.scenario = c.scenario;
  std::vector<std::string> errors;

  Scenario sc;
  const bool custom = c.scenario == "custom";
  if (!custom) {
    auto found = scenario_by_name(c.scenario);
    if (!found) throw config_error("unknown scenario '" + c.scenario + "' (expected reference, equator, equilibrium or custom)");
    sc = *found;
  } else if (!c.initial_path || !c.target_path) {
    throw config_error("custom scenario requires profiles.initial and profiles.target");
  }

  std::optional<SpinProfile> initial_file, target_file;
  if (c.initial_path) initial_file = read_profile_csv(*c.initial_path);
  if (c.target_path) target_file = read_profile_csv(*c.target_path);
  if (target_file) {
    sc.omega_lo = target_file->grid.omega_lo();
    sc.omega_hi = target_file->grid.omega_hi();
    sc.n_cells = target_file->grid.n_cells();
  }

  const double lo = c.omega_lo.value_or(sc.omega_lo);
  const double hi = c.omega_hi.value_or(sc.omega_hi);
  const std::int64_t cells = c.n_cells.value_or(sc.n_cells);
  if (!(lo < hi)) errors.push_back("grid.omega_lo must be < grid.omega_hi");
  if (cells < 2) errors.push_back("grid.n_cells must be >= 2");
  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += " [" + e + "]";
    throw config_error(msg);
  }
  const OmegaGrid grid(lo, hi, static_cast<int>(cells));

  const double coupled = 2.0 * std::numbers::pi / (hi - lo);
  const double period = c.period.value_or(coupled);
  if (!(period > 0.0)) errors.push_back("timing.period must be > 0");
  else if (c.period && std::abs(*c.period - coupled) > 1e-12 * coupled) {
    run.warnings.push_back("timing.period differs from 2*pi/(omega_hi-omega_lo) = " + format_real(coupled));
  }

  std::int64_t spp = sc.steps_per_period;
  if (c.steps_per_period && c.step) errors.push_back("give only one of timing.steps_per_period and timing.step");
  if (c.steps_per_period) spp = *c.steps_per_period;
  if (c.step && period > 0.0) {
    if (auto r = detail::exact_ratio(period, *c.step)) spp = *r;
    else errors.push_back("timing.step must divide timing.period exactly (period/step = " +
                          format_real(period / *c.step) + ")");
  }
  if (spp < 1) errors.push_back("timing.steps_per_period must be >= 1");

  std::int64_t periods = sc.n_periods;
  if (c.periods && c.final_time) errors.push_back("give only one of timing.periods and timing.final_time");
  if (c.periods) periods = *c.periods;
  if (c.final_time && period > 0.0) {
    if (auto r = detail::exact_ratio(*c.final_time, period)) periods = *r;
    else errors.push_back("timing.final_time must be a positive multiple of timing.period");
  }
  if (periods < 1) errors.push_back("timing.periods must be >= 1");
  if (c.stride && *c.stride < 1) errors.push_back("output.stride must be >= 1");

  if (!errors.empty()) {
    std::string msg = "invalid config (" + std::to_string(errors.size()) + " problem(s)):";
    for (const auto& e : errors) msg += " [" + e + "]";
    throw config_error(msg);
  }

  run.sim.grid = grid;
  run.sim.period = period;
  run.sim.steps_per_period = spp;
  run.sim.n_periods = periods;
  run.sim.integrator = c.integrator.value_or(sc.integrator);
  run.sim.feedback = c.feedback.value_or(FeedbackForm::gradient);
  run.sim.record_stride = c.stride.value_or(10);
  run.sim.lab_frame_check = c.lab_frame_check.value_or(false);
  run.method = c.method.value_or(RotationMethod::sweep);
  if (c.out_dir) run.out_dir = *c.out_dir;

  auto check_file_grid = [&](const SpinProfile& p, const std::string& what) {
    if (!(p.grid.n_cells() == grid.n_cells() && std::abs(p.grid.omega_lo() - lo) <= 1e-12 &&
          std::abs(p.grid.omega_hi() - hi) <= 1e-12)) {
      throw config_error(what + " grid does not match the configured grid");
    }
  };
  if (initial_file) {
    check_file_grid(*initial_file, "profiles.initial");
    require_unit_profile(*initial_file, 1e-9, "profiles.initial");
    initial_file->grid = grid;
  }
  if (target_file) {
    check_file_grid(*target_file, "profiles.target");
    require_unit_profile(*target_file, 1e-9, "profiles.target");
    target_file->grid = grid;
  }

  run.problem.initial = initial_file ? *initial_file : sample_profile(grid, sc.initial);
  run.problem.target = target_file ? *target_file : sample_profile(grid, sc.target);
  if (c.rotation_path) {
    RotationField r = read_rotation_csv(*c.rotation_path);
    if (r.grid.n_cells() != grid.n_cells()) throw config_error("profiles.rotation grid does not match the configured grid");
    r.grid = grid;
    run.problem.rotation = with_derivative(std::move(r));
  } else if (sc.rotation_override && !target_file) {
    run.problem.rotation = constant_field(grid, *sc.rotation_override);
  } else {
    run.problem.rotation = build_rotation_field(run.problem.target, run.method);
  }
  run.sim.validate();
  run.problem.validate(grid);
  return run;
}

}  // namespace bloch
