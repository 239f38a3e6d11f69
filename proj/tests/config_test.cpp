#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "bloch/config.hpp"
#include "bloch/io.hpp"
#include "bloch/scenarios.hpp"

namespace bloch {
namespace {

std::string message_of(const std::string& text) {
  try {
    resolve(parse_run_config(text));
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
    return e.what();
  }
  ADD_FAILURE() << "expected a config error for:\n" << text;
  return {};
}

TEST(ParseRunConfig, AllKeys) {
  const RunConfig c = parse_run_config(R"(# comment line
scenario = reference
grid.omega_lo = 0
grid.omega_hi = 1   # trailing comment
grid.n_cells = 50
timing.steps_per_period = 500
timing.periods = 4
integrator = euler
feedback = frame_derivative
rotation.method = ode
output.dir = /tmp/x
output.stride = 5
check.lab_frame = true
)");
  EXPECT_EQ(c.scenario, "reference");
  EXPECT_EQ(c.n_cells, 50);
  EXPECT_EQ(c.steps_per_period, 500);
  EXPECT_EQ(c.periods, 4);
  EXPECT_EQ(c.integrator, Integrator::euler);
  EXPECT_EQ(c.method, RotationMethod::ode);
  EXPECT_EQ(c.feedback, FeedbackForm::frame_derivative);
  EXPECT_EQ(c.out_dir, "/tmp/x");
  EXPECT_EQ(c.stride, 5);
  EXPECT_EQ(c.lab_frame_check, true);
}

TEST(ParseRunConfig, RoundTrip) {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> real(-3.0, 3.0);
  std::uniform_int_distribution<int> coin(0, 1), small(1, 500);
  for (int trial = 0; trial < 100; ++trial) {
    RunConfig c;
    c.scenario = coin(rng) ? "reference" : "custom";
    if (coin(rng)) c.omega_lo = real(rng);
    if (coin(rng)) c.omega_hi = real(rng);
    if (coin(rng)) c.n_cells = small(rng);
    if (coin(rng)) c.period = std::abs(real(rng)) + 0.1;
    if (coin(rng)) c.steps_per_period = small(rng);
    else if (coin(rng)) c.step = std::abs(real(rng)) / 1000.0;
    if (coin(rng)) c.periods = small(rng);
    if (coin(rng)) c.integrator = coin(rng) ? Integrator::euler : Integrator::driftless;
    if (coin(rng)) c.method = coin(rng) ? RotationMethod::ode : RotationMethod::sweep;
    if (coin(rng)) c.feedback = coin(rng) ? FeedbackForm::frame_derivative : FeedbackForm::gradient;
    if (coin(rng)) c.initial_path = "in/initial.csv";
    if (coin(rng)) c.target_path = "in/target.csv";
    if (coin(rng)) c.out_dir = "out/run" + std::to_string(trial);
    if (coin(rng)) c.stride = small(rng);
    if (coin(rng)) c.lab_frame_check = coin(rng) == 1;
    EXPECT_EQ(parse_run_config(serialize(c)), c) << serialize(c);
  }
}

TEST(ParseRunConfig, CollectsEveryProblem) {
  try {
    parse_run_config("grid.n_cells = many\nbogus.key = 1\nintegrator = rk4\nno equals sign\n");
    FAIL() << "expected a config error";
  } catch (const Error& e) {
    const std::string m = e.what();
    EXPECT_EQ(e.kind(), ErrorKind::config);
    EXPECT_NE(m.find("5 problem"), std::string::npos) << m;
    EXPECT_NE(m.find("grid.n_cells"), std::string::npos);
    EXPECT_NE(m.find("bogus.key"), std::string::npos);
    EXPECT_NE(m.find("integrator"), std::string::npos);
    EXPECT_NE(m.find("key = value"), std::string::npos);
    EXPECT_NE(m.find("scenario"), std::string::npos);
  }
}

TEST(Resolve, ReferenceDefaults) {
  const ResolvedRun r = resolve(parse_run_config("scenario = reference\n"));
  EXPECT_EQ(r.sim.grid.n_cells(), 100);
  EXPECT_EQ(r.sim.grid.omega_lo(), 0.0);
  EXPECT_EQ(r.sim.grid.omega_hi(), 1.0);
  EXPECT_DOUBLE_EQ(r.sim.period, 2.0 * std::numbers::pi);
  EXPECT_EQ(r.sim.steps_per_period, 1000);
  EXPECT_EQ(r.sim.n_periods, 20);
  EXPECT_DOUBLE_EQ(r.sim.final_time(), 40.0 * std::numbers::pi);
  EXPECT_EQ(r.sim.integrator, Integrator::driftless);
  EXPECT_EQ(r.sim.feedback, FeedbackForm::gradient);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Resolve, StepMustDividePeriod) {
  const std::string m = message_of("scenario = reference\ntiming.step = 0.0063\n");
  EXPECT_NE(m.find("timing.step must divide timing.period"), std::string::npos) << m;
}

TEST(Resolve, StepThatDividesIsAccepted) {
  const double h = 2.0 * std::numbers::pi / 250.0;
  const ResolvedRun r = resolve(parse_run_config("scenario = reference\ntiming.step = " + format_real(h) + "\n"));
  EXPECT_EQ(r.sim.steps_per_period, 250);
}

TEST(Resolve, FinalTimeMustBeMultiple) {
  const std::string m = message_of("scenario = reference\ntiming.final_time = 10\n");
  EXPECT_NE(m.find("final_time"), std::string::npos) << m;
}

TEST(Resolve, UnknownScenario) {
  const std::string m = message_of("scenario = nowhere\n");
  EXPECT_NE(m.find("nowhere"), std::string::npos);
}

TEST(Resolve, PeriodOverrideWarns) {
  const ResolvedRun r = resolve(parse_run_config("scenario = reference\ntiming.period = 3\n"));
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_EQ(r.sim.period, 3.0);
}

TEST(Resolve, DataFileRejected) {
  const std::string path = std::string(TEST_DATA_DIR) + "/bad_step.cfg";
  try {
    resolve(load_run_config(path));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.exit_code(), 2);
  }
}

TEST(Resolve, MissingProfileFileIsIoError) {
  try {
    resolve(parse_run_config("scenario = custom\nprofiles.initial = /nonexistent/a.csv\nprofiles.target = /nonexistent/b.csv\n"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
    EXPECT_EQ(e.exit_code(), 4);
  }
}

TEST(Resolve, CustomProfilesFromFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "bloch_custom_cfg";
  const Scenario s = reference_scenario();
  const OmegaGrid g(0.0, 1.0, 40);
  write_profile_csv(dir / "initial.csv", sample_profile(g, s.initial));
  write_profile_csv(dir / "target.csv", sample_profile(g, s.target));
  const ResolvedRun r = resolve(parse_run_config("scenario = custom\nprofiles.initial = " + (dir / "initial.csv").string() +
                                                 "\nprofiles.target = " + (dir / "target.csv").string() + "\n"));
  EXPECT_EQ(r.sim.grid.n_cells(), 40);
  EXPECT_EQ(r.problem.initial.values, sample_profile(g, s.initial).values);
  std::filesystem::remove_all(dir);
}

TEST(ProfileCsv, RoundTripIsExact) {
  const auto path = std::filesystem::temp_directory_path() / "bloch_profile_roundtrip.csv";
  std::mt19937_64 rng(59);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 10; ++trial) {
    const OmegaGrid g(-0.3 * trial, 1.0 + trial, 7 + trial);
    const SpinProfile p = sample_profile(g, [&](double) { return renormalize({nd(rng), nd(rng), nd(rng)}); });
    write_profile_csv(path, p);
    const SpinProfile back = read_profile_csv(path);
    EXPECT_EQ(back.values, p.values);
    EXPECT_EQ(back.grid.n_cells(), g.n_cells());
  }
  std::filesystem::remove(path);
}

TEST(ReferenceScenario, InitialPoleValue) {
  // -cos(pi/8) + 0.05 (1 - cos(pi/8)) = -0.92007...
  const double c8 = std::cos(std::numbers::pi / 8.0);
  EXPECT_NEAR(reference_initial_z(0.0), -c8 + 0.05 * (1.0 - c8), 1e-15);
  EXPECT_NEAR(reference_initial_z(0.0), -0.92010, 5e-5);
}

TEST(ReferenceScenario, SouthernHemisphereAndUnitNorm) {
  const Scenario s = reference_scenario();
  for (int k = 0; k <= 10000; ++k) {
    const double w = k / 10000.0;
    EXPECT_LT(s.initial(w).z, 0.0);
    EXPECT_LT(s.target(w).z, 0.0);
  }
  const OmegaGrid g(0.0, 1.0, 100);
  for (const Vec3& v : sample_profile(g, s.initial).values) EXPECT_NEAR(norm(v), 1.0, 1e-15);
  for (const Vec3& v : sample_profile(g, s.target).values) EXPECT_NEAR(norm(v), 1.0, 1e-15);
}

TEST(EquatorScenario, InitialNIsInEquatorPlane) {
  const Scenario s = equator_scenario();
  for (double w : {0.0, 0.4, 1.0}) {
    const Vec3 n = equator_rotation * s.initial(w);
    EXPECT_NEAR(n.x, 0.0, 1e-15);
    EXPECT_NEAR(norm(n), 1.0, 1e-15);
    EXPECT_EQ(equator_rotation * s.target(w), -e3);
  }
}

}  // namespace
}  // namespace bloch
