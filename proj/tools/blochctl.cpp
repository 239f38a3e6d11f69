// blochctl: closed-loop Bloch ensemble simulations from the command line.

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "bloch/commands.hpp"

namespace {

struct Choices {
  std::string method, integrator, feedback;
};

void add_run_options(CLI::App* cmd, bloch::RunSource& src, Choices& ch) {
  cmd->add_option("--config", src.config, "run config file (key = value lines)");
  cmd->add_option("--scenario", src.scenario, "built-in scenario")
      ->check(CLI::IsMember({"reference", "equator", "equilibrium"}));
  cmd->add_option("--out", src.out_dir, "output directory");
  cmd->add_option("--stride", src.stride, "record every K steps")->check(CLI::PositiveNumber);
  cmd->add_option("--method", ch.method, "rotation field construction")->check(CLI::IsMember({"sweep", "ode"}));
  cmd->add_option("--integrator", ch.integrator, "state frame for the Euler steps")
      ->check(CLI::IsMember({"driftless", "euler"}));
  cmd->add_option("--feedback", ch.feedback, "grid evaluation of the feedback")
      ->check(CLI::IsMember({"gradient", "frame_derivative"}));
  cmd->add_flag("--lab-frame-check", src.lab_frame_check,
                "also integrate in the lab frame with explicit pi impulses and compare at t = 2kT");
}

void apply_choices(bloch::RunSource& src, const Choices& ch) {
  if (!ch.method.empty()) src.method = bloch::parse_method(ch.method);
  if (!ch.integrator.empty()) src.integrator = bloch::parse_integrator(ch.integrator);
  if (!ch.feedback.empty()) src.feedback = bloch::parse_feedback(ch.feedback);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lyapunov stabilization of Bloch-equation ensembles"};
  app.require_subcommand(1);

  bloch::RunSource sim_src, refine_src;
  Choices sim_choices, refine_choices;
  auto* simulate = app.add_subcommand("simulate", "run the closed loop and write CSVs and a summary");
  add_run_options(simulate, sim_src, sim_choices);
  auto* refine = app.add_subcommand("refine", "compare against runs with 2N cells and half the step");
  add_run_options(refine, refine_src, refine_choices);

  bloch::RotationFieldArgs rot_args;
  std::string rot_method = "sweep";
  std::string rot_out = "out";
  auto* rotation = app.add_subcommand("rotation-field", "build and validate R(omega) for a target profile");
  rotation->add_option("--target", rot_args.target, "target profile CSV");
  rotation->add_option("--scenario", rot_args.scenario, "use a built-in scenario's target");
  rotation->add_option("--method", rot_method, "sweep or ode")->check(CLI::IsMember({"sweep", "ode"}));
  rotation->add_option("--out", rot_out, "output directory");

  bloch::LyapunovArgs lyap_args;
  std::string lyap_method = "sweep";
  auto* lyap = app.add_subcommand("lyapunov", "evaluate the Lyapunov value of an initial/target profile pair");
  lyap->add_option("--initial", lyap_args.initial, "initial profile CSV")->required();
  lyap->add_option("--target", lyap_args.target, "target profile CSV")->required();
  lyap->add_option("--rotation", lyap_args.rotation, "rotation field CSV (default: build from target)");
  lyap->add_option("--method", lyap_method, "sweep or ode")->check(CLI::IsMember({"sweep", "ode"}));

  std::string plot_out = "out";
  auto* plot = app.add_subcommand("plot-script", "write a gnuplot script for simulate's CSVs");
  plot->add_option("--out", plot_out, "output directory");

  auto* version = app.add_subcommand("version", "print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[E_CONFIG]: " << e.what() << '\n';
    return static_cast<int>(bloch::ErrorKind::config);
  }

  if (*simulate) {
    apply_choices(sim_src, sim_choices);
    return bloch::cmd_simulate(sim_src, std::cout, std::cerr);
  }
  if (*refine) {
    apply_choices(refine_src, refine_choices);
    return bloch::cmd_refine(refine_src, std::cout, std::cerr);
  }
  if (*rotation) {
    rot_args.method = *bloch::parse_method(rot_method);
    rot_args.out_dir = rot_out;
    return bloch::cmd_rotation_field(rot_args, std::cout, std::cerr);
  }
  if (*lyap) {
    lyap_args.method = *bloch::parse_method(lyap_method);
    return bloch::cmd_lyapunov(lyap_args, std::cout, std::cerr);
  }
  if (*plot) return bloch::cmd_plot_script(plot_out, std::cout, std::cerr);
  if (*version) {
    std::cout << "blochctl " << bloch::version_string << '\n';
    return 0;
  }
  return EXIT_FAILURE;
}
