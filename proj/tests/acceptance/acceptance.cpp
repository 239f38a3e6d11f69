// Acceptance checks. Prints one PASS/FAIL line per criterion plus "info:"
// lines with the measured numbers; exits nonzero if any criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "bloch/commands.hpp"
#include "bloch/config.hpp"
#include "bloch/control_law.hpp"
#include "bloch/omega_grid.hpp"
#include "bloch/rotation_field.hpp"
#include "bloch/scenarios.hpp"
#include "bloch/simulator.hpp"

namespace {

using namespace bloch;

constexpr double kT = 2.0 * std::numbers::pi;

int failures = 0;

void verdict(int id, bool ok, const std::string& what) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void info(const std::string& line) { std::printf("  info: %s\n", line.c_str()); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

const OmegaGrid kGrid(0.0, 1.0, 100);

SimConfig golden_config(Integrator integ = Integrator::driftless) {
  SimConfig c = reference_scenario().default_config();
  c.integrator = integ;
  return c;
}

double cumulative_increase(const SimResult& res) {
  double up = 0.0;
  for (std::size_t k = 1; k < res.records.size(); ++k) {
    up += std::max(0.0, res.records[k].lyapunov - res.records[k - 1].lyapunov);
  }
  return up;
}

double echo_at(const SimResult& res, std::int64_t k) {
  for (const auto& [kk, d] : res.echo_distances(kT)) {
    if (kk == k) return d;
  }
  return std::nan("");
}

void golden(const SimResult& res) {
  const double l0 = res.summary.lyapunov_initial, lf = res.summary.lyapunov_final;
  verdict(1, std::abs(l0 - 0.1929) <= 0.05 && lf / l0 <= 0.05,
          "golden run L(0) = " + fmt(l0) + " (0.1929 +- 0.05), L(20T)/L(0) = " + fmt(lf / l0) + " (<= 0.05)");
  info("L(20T) = " + fmt(lf) + ", wall " + fmt(res.summary.wall_seconds) + " s");
}

double decay_worst(FeedbackForm form, int& used) {
  const Problem p = make_problem(reference_scenario(), kGrid, RotationMethod::sweep);
  SimConfig c = golden_config();
  c.feedback = form;
  c.steps_per_period = 10000;
  c.record_stride = c.total_steps();
  const StepSchedule sched = c.schedule();
  const double h = sched.step();

  // One sample per period at a pseudo-random offset inside it.
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::int64_t> offset(1, c.steps_per_period - 2);
  std::vector<std::int64_t> samples;
  std::set<std::int64_t> wanted;
  for (std::int64_t j = 0; j < 20; ++j) {
    const std::int64_t n = j * c.steps_per_period + offset(rng);
    samples.push_back(n);
    for (std::int64_t d = -1; d <= 1; ++d) wanted.insert(n + d);
  }
  std::vector<double> lyap(c.total_steps() + 1, std::nan(""));
  std::vector<double> uu(c.total_steps() + 1, std::nan(""));
  run(c, p, [&](const SimState& s, const Controls& u) {
    if (!wanted.count(s.step)) return;
    lyap[s.step] = lyapunov(to_n_frame(s, sched, p.rotation));
    uu[s.step] = u.u1 * u.u1 + u.u2 * u.u2;
  });

  double worst = 0.0;
  used = 0;
  for (std::int64_t n : samples) {
    const double slope = (lyap[n + 1] - lyap[n - 1]) / (2.0 * h);
    if (std::abs(slope) <= 1e-6) continue;
    ++used;
    worst = std::max(worst, std::abs(slope + uu[n]) / std::abs(slope));
  }
  return worst;
}

void decay_identity() {
  int used = 0;
  const double worst = decay_worst(FeedbackForm::gradient, used);
  verdict(2, used > 0 && worst <= 0.02,
          "dL/dt = -(u1^2 + u2^2) at h = T/10000: max rel err " + fmt(worst) + " over " + std::to_string(used) +
              " of 20 samples with |dL/dt| > 1e-6 (<= 0.02)");
  int used_fd = 0;
  const double worst_fd = decay_worst(FeedbackForm::frame_derivative, used_fd);
  info("frame_derivative feedback: max rel err " + fmt(worst_fd) + " over " + std::to_string(used_fd) + " samples");
}

void rotation_fields() {
  const SpinProfile m_f = sample_profile(kGrid, reference_scenario().target);
  const RotationReport sw = validate(build_sweep(m_f), m_f);
  const RotationReport od = validate(build_ode(m_f), m_f);
  const double defect = std::max({sw.max_orthogonality_defect, sw.max_det_defect, od.max_orthogonality_defect,
                                  od.max_det_defect});
  double ratio_sw = 0.0, ratio_od = 0.0;
  for (auto method : {RotationMethod::sweep, RotationMethod::ode}) {
    const SimResult r = run(golden_config(), make_problem(reference_scenario(), kGrid, method));
    (method == RotationMethod::sweep ? ratio_sw : ratio_od) = r.summary.lyapunov_final / r.summary.lyapunov_initial;
  }
  verdict(4, sw.max_residual <= 1e-12 && od.max_residual <= 1e-6 && defect <= 1e-10 && ratio_sw <= 0.05 &&
                 ratio_od <= 0.05,
          "rotation fields: sweep residual " + fmt(sw.max_residual) + " (<= 1e-12), ode residual " +
              fmt(od.max_residual) + " (<= 1e-6), defects " + fmt(defect) + " (<= 1e-10), L ratios sweep " +
              fmt(ratio_sw) + " / ode " + fmt(ratio_od) + " (<= 0.05)");
  info("sweep H1 ratio " + fmt(sw.h1_ratio()) + ", ode H1 ratio " + fmt(od.h1_ratio()));
}

struct RestStats {
  double lyap_max = 0.0;
  double lyap_drift = 0.0;
  double u_max = 0.0;
};

RestStats rest_run(const Scenario& s, Integrator integ) {
  const Problem p = make_problem(s, kGrid, RotationMethod::sweep);
  const SimConfig c = golden_config(integ);
  const StepSchedule sched = c.schedule();
  RestStats st;
  double l0 = std::nan("");
  run(c, p, [&](const SimState& state, const Controls& u) {
    const double l = lyapunov(to_n_frame(state, sched, p.rotation));
    if (std::isnan(l0)) l0 = l;
    st.lyap_max = std::max(st.lyap_max, l);
    st.lyap_drift = std::max(st.lyap_drift, std::abs(l - l0));
    st.u_max = std::max({st.u_max, std::abs(u.u1), std::abs(u.u2)});
  });
  return st;
}

void equilibrium() {
  const RestStats s = rest_run(equilibrium_scenario(), Integrator::driftless);
  verdict(5, s.lyap_max <= 1e-9 && s.u_max <= 1e-12,
          "equilibrium M0 = Mf: max L " + fmt(s.lyap_max) + " (<= 1e-9), max |u| " + fmt(s.u_max) + " (<= 1e-12)");
  const RestStats e = rest_run(equilibrium_scenario(), Integrator::euler);
  info("euler integrator: max L " + fmt(e.lyap_max) + ", max |u| " + fmt(e.u_max));
}

void frame_equivalence() {
  double lab_delta = 0.0;
  for (auto method : {RotationMethod::sweep, RotationMethod::ode}) {
    SimConfig c = golden_config(Integrator::euler);
    c.lab_frame_check = true;
    const SimResult r = run(c, make_problem(reference_scenario(), kGrid, method));
    lab_delta = std::max(lab_delta, r.summary.lab_frame_max_delta.value_or(1.0));
  }

  const SimConfig c = golden_config(Integrator::euler);
  const StepSchedule sched = c.schedule();
  bool sigma_zero = true;
  for (std::int64_t k = 0; 2 * k <= c.n_periods; ++k) {
    sigma_zero = sigma_zero && sched.sigma(2 * k * c.steps_per_period) == 0.0 &&
                 sched.clock().sigma(2.0 * static_cast<double>(k) * kT) == 0.0;
  }

  // M = M1 on every step of [2kT, (2k+1)T); at (2k+1)T itself the left limit
  // is M1 and the impulse then flips the lab value.
  bool bitwise = true;
  std::int64_t compared = 0;
  run(c, make_problem(reference_scenario(), kGrid, RotationMethod::sweep), [&](const SimState& s, const Controls&) {
    if (sched.epsilon(s.step) < 0) return;
    bitwise = bitwise && reconstruct_lab(s, sched).values == s.m.values;
    ++compared;
  });
  verdict(6, lab_delta <= 1e-10 && sigma_zero && bitwise,
          "lab frame with pi impulses vs M1 frame at t = 2kT: max Linf " + fmt(lab_delta) +
              " (<= 1e-10); sigma(2kT) == 0: " + (sigma_zero ? "yes" : "no") + "; M == M1 bitwise on " +
              std::to_string(compared) + " even-period steps: " + (bitwise ? "yes" : "no"));
}

void refinement() {
  RunConfig base;
  base.scenario = "reference";
  const RefineReport r = refine(base);
  verdict(7, r.grid_linf_delta && *r.grid_linf_delta <= 5e-2 && r.step_linf_delta <= 1e-2,
          "refinement: N=100 vs 200 final Linf " + fmt(r.grid_linf_delta.value_or(1.0)) + " (<= 5e-2), h vs h/2 " +
              fmt(r.step_linf_delta) + " (<= 1e-2)");
  base.integrator = Integrator::euler;
  const RefineReport e = refine(base);
  info("euler integrator: N=100 vs 200 " + fmt(e.grid_linf_delta.value_or(1.0)) + ", h vs h/2 " +
       fmt(e.step_linf_delta));
}

void equator() {
  const RestStats s = rest_run(equator_scenario(), Integrator::driftless);
  verdict(8, s.u_max <= 1e-12 && s.lyap_drift <= 1e-9,
          "equator target: max |u| " + fmt(s.u_max) + " (<= 1e-12), L drift " + fmt(s.lyap_drift) + " (<= 1e-9)");
  const RestStats e = rest_run(equator_scenario(), Integrator::euler);
  info("euler integrator: max |u| " + fmt(e.u_max) + ", L drift " + fmt(e.lyap_drift));
}

void convergence(const SimResult& res) {
  const double d1 = echo_at(res, 1), d10 = echo_at(res, 10);
  verdict(9, d10 * 3.0 <= d1 && d10 <= 0.15,
          "|M(2kT) - Mf|_inf: k=1 " + fmt(d1) + ", k=10 " + fmt(d10) + " (factor " + fmt(d1 / d10) +
              " >= 3, k=10 <= 0.15)");
}

void unit_kernels() {
  double worst_int = 0.0, worst_der = 0.0, worst_lyap = 0.0;
  for (const OmegaGrid& g : {OmegaGrid(0.0, 1.0, 100), OmegaGrid(-1.5, 2.5, 37), OmegaGrid(3.0, 3.5, 8)}) {
    const double a = 0.7, b = -1.9;
    std::vector<double> lin(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) lin[i] = a * g.node(i) + b;
    const double lo = g.omega_lo(), hi = g.omega_hi();
    const double exact = 0.5 * a * (hi * hi - lo * lo) + b * (hi - lo);
    worst_int = std::max(worst_int, std::abs(integrate(lin, g) - exact));

    const SpinProfile p = sample_profile(g, [&](double w) { return Vec3{a * w + b, -w, 2.0}; });
    const std::vector<Vec3> d = derivative(p);
    for (std::size_t i = 1; i + 1 < g.size(); ++i) worst_der = std::max(worst_der, norm(d[i] - Vec3{a, -1.0, 0.0}));

    worst_lyap = std::max(worst_lyap, std::abs(lyapunov(constant_profile(g, -e3))));
    worst_lyap = std::max(worst_lyap, std::abs(lyapunov(constant_profile(g, e3)) - 2.0 * g.width()));
  }
  verdict(10, worst_int <= 1e-12 && worst_der <= 1e-12 && worst_lyap <= 1e-12,
          "kernels: integrate on linears " + fmt(worst_int) + ", derivative on linears " + fmt(worst_der) +
              ", L(-e3) / L(+e3) " + fmt(worst_lyap) + " (all <= 1e-12)");
}

}  // namespace

int main() {
  try {
    const SimResult res = run(golden_config(), make_problem(reference_scenario(), kGrid, RotationMethod::sweep));
    golden(res);
    decay_identity();
    const double up = cumulative_increase(res);
    verdict(3, up <= 1e-4, "recorded L non-increasing: cumulative increase " + fmt(up) + " (<= 1e-4)");
    rotation_fields();
    equilibrium();
    frame_equivalence();
    refinement();
    equator();
    convergence(res);
    unit_kernels();

    const SimResult eu = run(golden_config(Integrator::euler), make_problem(reference_scenario(), kGrid, RotationMethod::sweep));
    info("euler integrator golden run: L(0) " + fmt(eu.summary.lyapunov_initial) + ", L(20T) " +
         fmt(eu.summary.lyapunov_final) + ", cumulative increase " + fmt(cumulative_increase(eu)) + ", echo k=1 " +
         fmt(echo_at(eu, 1)) + ", k=10 " + fmt(echo_at(eu, 10)));
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%s: %d criterion failure(s)\n", failures == 0 ? "OK" : "FAILED", failures);
  return failures == 0 ? 0 : 1;
}
