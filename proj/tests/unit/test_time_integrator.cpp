#include "rdc/errors.hpp"
#include "rdc/time_integrator.hpp"
#include "systems.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>

using namespace rdc;
using rdc::testing::scalar_poly;
using rdc::testing::zero_system;

namespace {

constexpr double kPi = std::numbers::pi;

SpectralField cosine(const Grid& grid, int k, double amp = 1.0) {
  NodalArray a(1, grid.size());
  for (int i = 0; i < grid.size(); ++i) a(0, i) = amp * std::cos(2 * kPi * k * grid.x(i));
  return to_spectral(grid, a);
}

double max_abs(const SpectralField& u) { return to_nodal(u).cwiseAbs().maxCoeff(); }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

IntegratorConfig quick_config() {
  IntegratorConfig c;
  c.t_transient = 0.5;
  c.t_sample = 0.5;
  c.n_snapshots = 6;
  c.n_trajectories = 2;
  c.t_probe = 2.0;
  c.probes_per_radius = 1;
  return c;
}

}  // namespace

TEST(Step, LinearDecayExactForEtdrk4) {
  Grid grid(32);
  const auto sys = zero_system(1, 1.0);
  const double dt = 1e-3;
  const SpectralField out = step(sys, cosine(grid, 1), dt, Scheme::etdrk4);
  const double expect = std::exp(-(1 + 4 * kPi * kPi) * dt);
  EXPECT_NEAR(out.coeff(0, 1).real() / 0.5, expect, 1e-14);
}

TEST(Step, LinearDecaySecondOrderForCnab2) {
  Grid grid(32);
  const auto sys = zero_system(1, 1.0);
  const double dt = 1e-3;
  const SpectralField out = step(sys, cosine(grid, 1), dt, Scheme::imex_cnab2);
  const double expect = std::exp(-(1 + 4 * kPi * kPi) * dt);
  EXPECT_LT(std::abs(out.coeff(0, 1).real() / 0.5 - expect) / expect, 10.0 * dt * dt);
}

TEST(Step, EquilibriumIsFixed) {
  Grid grid(64);
  const auto sys = builtin("scalar_burgers");
  NodalArray one = NodalArray::Ones(1, grid.size());
  const SpectralField u = to_spectral(grid, one);
  for (Scheme s : {Scheme::etdrk4, Scheme::imex_cnab2}) {
    const SpectralField out = integrate(sys, u, 0.05, 1e-3, s);
    EXPECT_LT(max_abs(out - u), 1e-12) << scheme_name(s);
  }
}

TEST(Step, ConvergenceOrder) {
  Grid grid(64);
  const auto sys = builtin("scalar_burgers", Json{{"d", 0.05}});
  const SpectralField u0 = cosine(grid, 1) + 0.5 * cosine(grid, 2);
  const double T = 0.2;
  const SpectralField ref = integrate(sys, u0, T, 1e-4, Scheme::etdrk4);
  auto err = [&](double dt, Scheme s) { return max_abs(integrate(sys, u0, T, dt, s) - ref); };
  const double r4 = err(0.02, Scheme::etdrk4) / err(0.01, Scheme::etdrk4);
  EXPECT_GT(r4, 11.0);
  EXPECT_LT(r4, 22.0);
  const double r2 = err(0.004, Scheme::imex_cnab2) / err(0.002, Scheme::imex_cnab2);
  EXPECT_GT(r2, 3.3);
  EXPECT_LT(r2, 4.8);
}

TEST(Step, SemigroupOnLinearSystem) {
  Grid grid(32);
  const auto sys = zero_system(1, 0.2);
  std::mt19937_64 rng(2);
  const SpectralField u = random_field(grid, 1, rng, 3.0, 10);
  const SpectralField twice = step(sys, step(sys, u, 1e-3), 1e-3);
  const SpectralField once = step(sys, u, 2e-3);
  EXPECT_LT(max_abs(twice - once), 1e-14);
}

TEST(Step, BlowUpRaisesDivergenceFault) {
  Grid grid(32);
  const auto sys = scalar_poly(0.1, 0.0, 0.0, 0.0, 0.0, 1.0, 1e12);
  EXPECT_THROW(integrate(sys, cosine(grid, 0, 3.0), 5.0, 1e-3), DivergenceFault);
}

TEST(Step, GridMismatch) {
  const auto sys = zero_system(1, 1.0);
  Stepper stepper(sys, Grid(32), 1e-3, Scheme::etdrk4);
  EXPECT_THROW(stepper.step(SpectralField(Grid(64), 1)), SizeMismatch);
}

TEST(Dissipativity, LinearSystemContracts) {
  Grid grid(32);
  const auto sys = zero_system(2, 0.1);
  IntegratorConfig c = quick_config();
  c.t_probe = 40.0;
  c.dt = 1e-2;
  const auto rep = probe_dissipativity(sys, grid, {0.5, 5.0}, c);
  EXPECT_TRUE(rep.entered_ball);
  EXPECT_LT(rep.absorbing_radius, 1e-6);
  for (const auto& p : rep.probes) EXPECT_FALSE(p.failed);
}

TEST(Dissipativity, ScalarBurgersEntersBall) {
  Grid grid(128);
  const auto sys = builtin("scalar_burgers");
  IntegratorConfig c;
  c.probes_per_radius = 1;
  const auto rep = probe_dissipativity(sys, grid, {0.1, 1.0, 10.0}, c);
  EXPECT_TRUE(rep.entered_ball);
  for (const auto& p : rep.probes) {
    EXPECT_FALSE(p.failed) << p.fault;
    EXPECT_GE(p.t_entry, 0.0);
  }
}

TEST(Dissipativity, SlowGrowthIsNotAbsorbed) {
  // g = 1.2 u: the mean mode grows like e^{0.2 t} without blowing up
  Grid grid(32);
  const auto sys = scalar_poly(0.1, 0.0, 0.0, 0.0, 1.2, 0.0);
  IntegratorConfig c = quick_config();
  c.t_probe = 10.0;
  const auto rep = probe_dissipativity(sys, grid, {0.5}, c);
  for (const auto& p : rep.probes) EXPECT_FALSE(p.failed);
  EXPECT_FALSE(rep.entered_ball);
}

TEST(Dissipativity, AntidissipativeFaultIsRecorded) {
  Grid grid(32);
  const auto sys = scalar_poly(0.1, 0.0, 0.0, 0.0, 0.0, 1.0, 1e12);
  const auto rep = probe_dissipativity(sys, grid, {0.01, 100.0}, quick_config());
  EXPECT_FALSE(rep.entered_ball);
  ASSERT_EQ(rep.probes.size(), 2u);
  EXPECT_FALSE(rep.probes[0].failed);
  EXPECT_TRUE(rep.probes[1].failed);
  EXPECT_NE(rep.probes[1].fault.find("diverge"), std::string::npos) << rep.probes[1].fault;
}

TEST(Dissipativity, RejectsNonPositiveRadius) {
  EXPECT_THROW(probe_dissipativity(zero_system(1, 1.0), Grid(16), {0.0}, quick_config()),
               PreconditionError);
}

TEST(Sampler, LinearDecayIsDegenerate) {
  Grid grid(32);
  const auto sys = zero_system(1, 0.1);
  IntegratorConfig c = quick_config();
  c.t_transient = 30.0;
  const auto s = sample_attractor(sys, grid, c);
  EXPECT_TRUE(s.degenerate);
  EXPECT_LT(s.norm_alpha_max, 1e-9);
}

TEST(Sampler, SingleSnapshotHasSinglePair) {
  Grid grid(32);
  IntegratorConfig c = quick_config();
  c.n_snapshots = 1;
  const auto s = sample_attractor(builtin("scalar_burgers", Json{{"d", 0.05}}), grid, c);
  ASSERT_EQ(s.snapshots.size(), 1u);
  ASSERT_EQ(s.pair_index.size(), 1u);
  EXPECT_EQ(s.pair_index[0], std::make_pair(0, 0));
}

TEST(Sampler, SnapshotsAfterTransientAndHullWeightsValid) {
  Grid grid(64);
  IntegratorConfig c = quick_config();
  const auto sys = builtin("example53");
  const auto s = sample_attractor(sys, grid, c);
  ASSERT_EQ(static_cast<int>(s.snapshots.size()), c.n_snapshots);
  for (double t : s.times) EXPECT_GE(t, c.t_transient);
  const int n = static_cast<int>(s.snapshots.size());
  EXPECT_EQ(static_cast<int>(s.pair_index.size()), n * (n + 1) / 2);
  for (auto [i, j] : s.pair_index) {
    EXPECT_GE(i, 0);
    EXPECT_LT(j, n);
  }
  ASSERT_FALSE(s.hull_points.empty());
  for (const auto& h : s.hull_points) {
    double total = 0.0;
    for (double w : h.weights) {
      EXPECT_GE(w, 0.0);
      EXPECT_LE(w, 1.0);
      total += w;
    }
    EXPECT_NEAR(total, 1.0, 1e-14);
    EXPECT_TRUE(h.members.size() == 2 || h.members.size() == 3);
  }
  for (const auto& u : s.snapshots)
    EXPECT_LE(sobolev_norm(u, c.alpha, sys.D()), s.norm_alpha_max * (1 + 1e-14));
}

TEST(Sampler, SnapshotSpacingRespectsDecorrelationGap) {
  Grid grid(32);
  IntegratorConfig c = quick_config();
  c.n_trajectories = 1;
  c.n_snapshots = 20;
  c.t_sample = 0.01;
  const auto s = sample_attractor(builtin("scalar_burgers", Json{{"d", 0.05}}), grid, c);
  for (size_t i = 1; i < s.times.size(); ++i)
    EXPECT_GE(s.times[i] - s.times[i - 1], c.decorrelation_steps * c.dt - 1e-12);
}

TEST(Sampler, DeterministicStore) {
  Grid grid(32);
  IntegratorConfig c = quick_config();
  const auto sys = builtin("prop51_symmetric");
  const auto dir = std::filesystem::temp_directory_path() / "rdc_store_test";
  std::filesystem::remove_all(dir);
  write_store(dir / "a", sample_attractor(sys, grid, c), c.alpha, sys.D(), Json{{"seed", 1}});
  write_store(dir / "b", sample_attractor(sys, grid, c), c.alpha, sys.D(), Json{{"seed", 1}});
  for (const auto& e : std::filesystem::directory_iterator(dir / "a"))
    EXPECT_EQ(slurp(e.path()), slurp(dir / "b" / e.path().filename())) << e.path();
  Json manifest;
  const auto back = read_store(dir / "a", &manifest);
  const auto orig = sample_attractor(sys, grid, c);
  ASSERT_EQ(back.snapshots.size(), orig.snapshots.size());
  for (size_t i = 0; i < back.snapshots.size(); ++i)
    EXPECT_LT(max_abs(back.snapshots[i] - orig.snapshots[i]), 1e-13);
  EXPECT_EQ(back.hull_points.size(), orig.hull_points.size());
  EXPECT_EQ(manifest["seed"], 1);
  std::filesystem::remove_all(dir);
}

TEST(FlowPair, IdenticalStartsStayIdentical) {
  Grid grid(32);
  const auto sys = builtin("scalar_burgers", Json{{"d", 0.05}});
  const SpectralField u = cosine(grid, 1, 0.5);
  const auto h = flow_pair(sys, u, u, 0.1, 1e-3, Scheme::etdrk4, 10);
  ASSERT_EQ(h.times.size(), 11u);
  for (size_t i = 0; i < h.times.size(); ++i) EXPECT_EQ(max_abs(h.u[i] - h.v[i]), 0.0);
}

TEST(FlowPair, ZeroHorizonReturnsInputs) {
  Grid grid(32);
  const auto sys = zero_system(1, 1.0);
  const auto h = flow_pair(sys, cosine(grid, 1), cosine(grid, 2), 0.0, 1e-3);
  ASSERT_EQ(h.times.size(), 1u);
  EXPECT_EQ(max_abs(h.u[0] - cosine(grid, 1)), 0.0);
  EXPECT_EQ(max_abs(h.v[0] - cosine(grid, 2)), 0.0);
}

TEST(FlowPair, LinearContractionRate) {
  Grid grid(32);
  const double d = 0.3;
  const auto sys = zero_system(1, d);
  const auto h = flow_pair(sys, cosine(grid, 1), SpectralField(grid, 1), 0.5, 1e-3);
  const double rate = 1.0 + 4 * kPi * kPi * d;
  const double d0 = sobolev_norm(h.u.front() - h.v.front(), 0.0, sys.D());
  const double d1 = sobolev_norm(h.u.back() - h.v.back(), 0.0, sys.D());
  EXPECT_NEAR(d1 / d0, std::exp(-rate * 0.5), 1e-12);
}
