#pragma once

// Subcommand bodies for the blochctl tool. Each returns a process exit code
// (0 success, 2 config, 3 numeric, 4 I/O) and reports failures as a single
// line "error[E_...]: message" on `err`.

#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>

#include "bloch/config.hpp"
#include "bloch/error.hpp"
#include "bloch/io.hpp"
#include "bloch/omega_grid.hpp"
#include "bloch/rotation_field.hpp"
#include "bloch/scenarios.hpp"
#include "bloch/simulator.hpp"

namespace bloch {

inline constexpr const char* version_string = "0.1.0";

/// Where a run's settings come from: a config file, or a built-in scenario,
/// plus command-line overrides.
struct RunSource {
  std::optional<std::filesystem::path> config;
  std::optional<std::string> scenario;
  std::optional<std::string> out_dir;
  std::optional<std::int64_t> stride;
  std::optional<RotationMethod> method;
  std::optional<Integrator> integrator;
  std::optional<FeedbackForm> feedback;
  bool lab_frame_check = false;
};

inline RunConfig make_run_config(const RunSource& src) {
  if (src.config && src.scenario) throw config_error("give either --config or --scenario, not both");
  RunConfig c;
  if (src.config) c = load_run_config(*src.config);
  else if (src.scenario) c.scenario = *src.scenario;
  else throw config_error("no run selected: pass --config PATH or --scenario {reference|equator|equilibrium}");
  if (src.out_dir) c.out_dir = src.out_dir;
  if (src.stride) c.stride = src.stride;
  if (src.method) c.method = src.method;
  if (src.integrator) c.integrator = src.integrator;
  if (src.feedback) c.feedback = src.feedback;
  if (src.lab_frame_check) c.lab_frame_check = true;
  return c;
}

namespace detail {

inline std::string one_line(std::string s) {
  for (char& ch : s) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error[" << e.tag() << "]: " << one_line(e.what()) << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    err << "error[E_NUMERIC]: " << one_line(e.what()) << '\n';
    return static_cast<int>(ErrorKind::numeric);
  }
}

inline void print_report(std::ostream& out, const Report& r) {
  for (const auto& [k, v] : r) out << k << ": " << v << '\n';
}

}  // namespace detail

inline int cmd_simulate(const RunSource& src, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const ResolvedRun run = resolve(make_run_config(src));
    for (const auto& w : run.warnings) err << "warning: " << w << '\n';
    const SimResult res = bloch::run(run.sim, run.problem);
    const auto& dir = run.out_dir;
    write_trajectory_csv(dir / "trajectory.csv", res.records);
    write_profile_csv(dir / "initial_profile.csv", res.initial_lab);
    write_profile_csv(dir / "final_profile.csv", res.final_lab);
    write_profile_csv(dir / "target_profile.csv", run.problem.target);
    write_profile_csv(dir / "final_n_profile.csv", res.final_n);
    write_rotation_csv(dir / "rotation_field.csv", run.problem.rotation);
    Report rep{{"scenario", run.scenario},
               {"integrator", to_string(run.sim.integrator)},
               {"feedback", to_string(run.sim.feedback)},
               {"rotation_method", to_string(run.method)},
               {"n_cells", std::to_string(run.sim.grid.n_cells())},
               {"period", format_real(run.sim.period)},
               {"step", format_real(run.sim.step())},
               {"final_time", format_real(run.sim.final_time())},
               {"records", std::to_string(res.records.size())}};
    for (auto& kv : summary_report(res, run.sim.period)) rep.push_back(std::move(kv));
    write_report(dir / "summary.txt", rep);
    detail::print_report(out, rep);
    return 0;
  });
}

struct RefineReport {
  std::optional<double> grid_linf_delta;  ///< final profiles, N vs 2N, shared nodes
  std::optional<double> grid_lyapunov_delta;
  double step_linf_delta = 0.0;  ///< final profiles, h vs h/2
  double step_lyapunov_delta = 0.0;
};

/// Re-runs the resolved scenario at (N, 2N) and (h, h/2).
inline RefineReport refine(const RunConfig& base) {
  const ResolvedRun run = resolve(base);
  const SimResult ref = bloch::run(run.sim, run.problem);
  RefineReport rep;

  if (!base.initial_path && !base.target_path && !base.rotation_path) {
    RunConfig fine = base;
    fine.n_cells = 2 * run.sim.grid.n_cells();
    fine.omega_lo = run.sim.grid.omega_lo();
    fine.omega_hi = run.sim.grid.omega_hi();
    const ResolvedRun fr = resolve(fine);
    const SimResult fres = bloch::run(fr.sim, fr.problem);
    rep.grid_linf_delta = linf_on_shared_nodes(ref.final_lab, fres.final_lab);
    rep.grid_lyapunov_delta = std::abs(fres.summary.lyapunov_final - ref.summary.lyapunov_final);
  }

  ResolvedRun half = run;
  half.sim.steps_per_period = 2 * run.sim.steps_per_period;
  half.sim.record_stride = 2 * run.sim.record_stride;
  const SimResult hres = bloch::run(half.sim, half.problem);
  rep.step_linf_delta = norms(ref.final_lab, hres.final_lab).linf;
  rep.step_lyapunov_delta = std::abs(hres.summary.lyapunov_final - ref.summary.lyapunov_final);
  return rep;
}

inline int cmd_refine(const RunSource& src, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const RunConfig base = make_run_config(src);
    const RefineReport r = refine(base);
    Report rep;
    if (r.grid_linf_delta) {
      rep.emplace_back("grid_final_linf_delta", format_real(*r.grid_linf_delta));
      rep.emplace_back("grid_lyapunov_final_delta", format_real(*r.grid_lyapunov_delta));
    } else {
      rep.emplace_back("grid_final_linf_delta", "skipped (profiles loaded from files)");
    }
    rep.emplace_back("step_final_linf_delta", format_real(r.step_linf_delta));
    rep.emplace_back("step_lyapunov_final_delta", format_real(r.step_lyapunov_delta));
    write_report(std::filesystem::path(base.out_dir.value_or("out")) / "refine.txt", rep);
    detail::print_report(out, rep);
    return 0;
  });
}

struct RotationFieldArgs {
  std::optional<std::filesystem::path> target;  ///< profile CSV
  std::optional<std::string> scenario;          ///< or a built-in scenario's target
  RotationMethod method = RotationMethod::sweep;
  std::filesystem::path out_dir = "out";
};

inline int cmd_rotation_field(const RotationFieldArgs& args, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    SpinProfile target;
    if (args.target) {
      target = read_profile_csv(*args.target);
      require_unit_profile(target, 1e-6, args.target->string());
      for (Vec3& v : target.values) v = renormalize(v);
    } else if (args.scenario) {
      auto sc = scenario_by_name(*args.scenario);
      if (!sc) throw config_error("unknown scenario '" + *args.scenario + "'");
      target = sample_profile(OmegaGrid(sc->omega_lo, sc->omega_hi, sc->n_cells), sc->target);
    } else {
      throw config_error("rotation-field needs --target PATH or --scenario NAME");
    }
    const RotationField r = build_rotation_field(target, args.method);
    const RotationReport v = validate(r, target);
    write_rotation_csv(args.out_dir / "rotation_field.csv", r);
    const Report rep{{"method", to_string(args.method)},
                     {"nodes", std::to_string(r.size())},
                     {"max_residual", format_real(v.max_residual)},
                     {"max_orthogonality_defect", format_real(v.max_orthogonality_defect)},
                     {"max_det_defect", format_real(v.max_det_defect)},
                     {"max_frame_jump", format_real(v.max_frame_jump)},
                     {"h1_rotation", format_real(v.h1_rotation)},
                     {"h1_target", format_real(v.h1_target)},
                     {"h1_ratio", format_real(v.h1_ratio())}};
    write_report(args.out_dir / "rotation_report.txt", rep);
    detail::print_report(out, rep);
    return 0;
  });
}

struct LyapunovArgs {
  std::filesystem::path initial;
  std::filesystem::path target;
  std::optional<std::filesystem::path> rotation;
  RotationMethod method = RotationMethod::sweep;
};

/// L(R M0): the Lyapunov value at t = 0 for an initial profile and the
/// rotation field flattening its target.
inline double lyapunov_of_pair(const SpinProfile& initial, const RotationField& r) {
  require_same_grid(initial.grid, r.grid, "lyapunov");
  SpinProfile n = initial;
  for (std::size_t i = 0; i < n.size(); ++i) n[i] = r.mats[i] * initial[i];
  return lyapunov(n);
}

inline int cmd_lyapunov(const LyapunovArgs& args, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    SpinProfile initial = read_profile_csv(args.initial);
    SpinProfile target = read_profile_csv(args.target);
    require_unit_profile(initial, 1e-9, args.initial.string());
    require_unit_profile(target, 1e-9, args.target.string());
    if (initial.grid.n_cells() != target.grid.n_cells()) throw config_error("initial and target grids differ");
    initial.grid = target.grid;
    RotationField r = args.rotation ? read_rotation_csv(*args.rotation) : build_rotation_field(target, args.method);
    r.grid = target.grid;
    out << "lyapunov: " << format_real(lyapunov_of_pair(initial, r)) << '\n';
    return 0;
  });
}

/// gnuplot script plotting the CSVs written by `simulate` into the same directory.
inline std::string gnuplot_script() {
  return R"(# gnuplot -p plot.gp   (run from the output directory)
set datafile separator ','
set key autotitle columnhead
set multiplot layout 2,2
set title 'Lyapunov value'
set xlabel 't'
set logscale y
plot 'trajectory.csv' using 1:2 with lines
unset logscale y
set title 'Controls'
plot 'trajectory.csv' using 1:3 with lines, '' using 1:4 with lines
set title 'Distance to target at t = 2kT'
plot 'trajectory.csv' using 1:5 with linespoints
set title 'Profiles'
set xlabel 'omega'
plot 'initial_profile.csv' using 1:2 with lines title 'x0', '' using 1:3 with lines title 'y0', \
     '' using 1:4 with lines title 'z0', 'final_profile.csv' using 1:2 with points title 'x', \
     '' using 1:3 with points title 'y', '' using 1:4 with points title 'z', \
     'target_profile.csv' using 1:2 with lines dt 2 title 'xf', '' using 1:3 with lines dt 2 title 'yf', \
     '' using 1:4 with lines dt 2 title 'zf'
unset multiplot
)";
}

inline int cmd_plot_script(const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto path = out_dir / "plot.gp";
    std::ofstream f = detail::open_for_write(path);
    f << gnuplot_script();
    if (!f) throw io_error("write failed: " + path.string());
    out << "wrote " << path.string() << '\n';
    return 0;
  });
}

}  // namespace bloch
