#include "rdc/errors.hpp"
#include "rdc/spectral_grid.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

using namespace rdc;

namespace {

constexpr double kPi = std::numbers::pi;

NodalArray sample(const Grid& grid, int m, const std::function<double(int, double)>& fn) {
  NodalArray out(m, grid.size());
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < grid.size(); ++i) out(j, i) = fn(j, grid.x(i));
  return out;
}

SpectralField band_limited(const Grid& grid, int m, uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_field(grid, m, rng, 6.0, grid.dealias_cutoff());
}

}  // namespace

TEST(Grid, NodesAndPadding) {
  Grid grid(128);
  EXPECT_EQ(grid.size(), 128);
  EXPECT_EQ(grid.n_modes(), 65);
  EXPECT_DOUBLE_EQ(grid.x(1) - grid.x(0), 1.0 / 128);
  EXPECT_EQ(grid.padded_size(), 192);
  EXPECT_EQ(grid.dealias_cutoff(), 42);
  EXPECT_THROW(Grid(6), ConfigError);
  EXPECT_THROW(Grid(33), ConfigError);
}

TEST(DiffusionMatrix, RejectsNonPositive) {
  EXPECT_THROW(DiffusionMatrix(Eigen::Vector2d(1.0, 0.0)), ConfigError);
  EXPECT_TRUE(DiffusionMatrix::scalar(3, 0.5).is_scalar());
  EXPECT_FALSE(DiffusionMatrix(Eigen::Vector2d(1.0, 2.0)).is_scalar());
}

TEST(Transforms, ConstantField) {
  Grid grid(16);
  const SpectralField u = to_spectral(grid, NodalArray::Constant(1, 16, 2.5));
  EXPECT_NEAR(u.coeffs()(0, 0).real(), 2.5, 1e-15);
  for (int k = 1; k < grid.n_modes(); ++k) EXPECT_LT(std::abs(u.coeffs()(0, k)), 1e-15);
}

TEST(Transforms, SingleHarmonic) {
  Grid grid(16);
  const SpectralField u =
      to_spectral(grid, sample(grid, 1, [](int, double x) { return std::cos(2 * kPi * x); }));
  EXPECT_NEAR(u.coeff(0, 1).real(), 0.5, 1e-15);
  EXPECT_NEAR(u.coeff(0, -1).real(), 0.5, 1e-15);
  EXPECT_NEAR(std::abs(u.coeff(0, 2)), 0.0, 1e-15);
}

TEST(Transforms, RoundTrip) {
  Grid grid(128);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  NodalArray v(3, 128);
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 128; ++i) v(j, i) = normal(rng);
  const NodalArray back = to_nodal(to_spectral(grid, v));
  EXPECT_LE((back - v).norm() / v.norm(), 1e-12);
}

TEST(Transforms, SizeMismatch) {
  Grid grid(16);
  EXPECT_THROW(to_spectral(grid, NodalArray::Zero(1, 12)), SizeMismatch);
}

TEST(Transforms, InterpolationOntoFinerGrid) {
  Grid grid(16);
  const SpectralField u = to_spectral(
      grid, sample(grid, 1, [](int, double x) { return std::sin(2 * kPi * 3 * x) + 0.25; }));
  const NodalArray fine = to_nodal_on(u, 40);
  for (int i = 0; i < 40; ++i)
    EXPECT_NEAR(fine(0, i), std::sin(2 * kPi * 3 * i / 40.0) + 0.25, 1e-13);
  EXPECT_NEAR(evaluate_at(u, 0, 0.123), std::sin(2 * kPi * 3 * 0.123) + 0.25, 1e-13);
}

TEST(ApplyA, Constant) {
  Grid grid(16);
  const SpectralField u = to_spectral(grid, NodalArray::Constant(2, 16, 1.5));
  const SpectralField Au = apply_A(u, DiffusionMatrix(Eigen::Vector2d(1.0, 3.0)));
  EXPECT_LT((to_nodal(Au) - NodalArray::Constant(2, 16, 1.5)).norm(), 1e-13);
}

TEST(ApplyA, SymbolPerComponent) {
  Grid grid(32);
  const SpectralField u =
      to_spectral(grid, sample(grid, 2, [](int, double x) { return std::sin(2 * kPi * x); }));
  const NodalArray Au = to_nodal(apply_A(u, DiffusionMatrix(Eigen::Vector2d(1.0, 2.0))));
  for (int i = 0; i < 32; ++i) {
    const double s = std::sin(2 * kPi * grid.x(i));
    EXPECT_NEAR(Au(0, i), (1 + 4 * kPi * kPi) * s, 1e-12 * (1 + 4 * kPi * kPi));
    EXPECT_NEAR(Au(1, i), (1 + 8 * kPi * kPi) * s, 1e-12 * (1 + 8 * kPi * kPi));
  }
}

TEST(SobolevNorm, Examples) {
  Grid grid(32);
  const DiffusionMatrix D = DiffusionMatrix::scalar(1, 1.0);
  EXPECT_EQ(sobolev_norm(SpectralField(grid, 1), 0.8, D), 0.0);
  const SpectralField c =
      to_spectral(grid, sample(grid, 1, [](int, double x) { return std::cos(2 * kPi * x); }));
  EXPECT_NEAR(sobolev_norm(c, 0.0, D), std::sqrt(0.5), 1e-14);
  const SpectralField u = band_limited(grid, 1, 5);
  EXPECT_NEAR(sobolev_norm(u, 1.0, D), sobolev_norm(apply_A(u, D), 0.0, D),
              1e-12 * sobolev_norm(u, 1.0, D));
}

TEST(SobolevNorm, Parseval) {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    Grid grid(64);
    const SpectralField u = band_limited(grid, 2, seed);
    const NodalArray v = to_nodal(u);
    const double nodal = std::sqrt(v.squaredNorm() / grid.size());
    const DiffusionMatrix D(Eigen::Vector2d(0.3, 1.7));
    EXPECT_NEAR(sobolev_norm(u, 0.0, D), nodal, 1e-10 * nodal);
  }
}

TEST(ApplyA, PositiveDefinite) {
  Grid grid(64);
  const DiffusionMatrix D(Eigen::Vector2d(0.01, 2.0));
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const SpectralField u = band_limited(grid, 2, seed);
    const NodalArray a = to_nodal(apply_A(u, D));
    const NodalArray b = to_nodal(u);
    const double inner = (a.array() * b.array()).sum() / grid.size();
    const double l2 = b.squaredNorm() / grid.size();
    EXPECT_GE(inner, l2 * (1 - 1e-12));
  }
}

TEST(Projection, Examples) {
  Grid grid(32);
  const SpectralField u = band_limited(grid, 1, 2);
  EXPECT_EQ((project_low_modes(u, grid.nyquist()).coeffs() - u.coeffs()).norm(), 0.0);
  const SpectralField c =
      to_spectral(grid, sample(grid, 1, [](int, double x) { return std::cos(2 * kPi * x); }));
  EXPECT_LT(to_nodal(project_low_modes(c, 0)).norm(), 1e-15);
  EXPECT_THROW(project_low_modes(u, grid.nyquist() + 1), PreconditionError);
}

TEST(Projection, IdempotentAndCommutesWithA) {
  Grid grid(64);
  const DiffusionMatrix D(Eigen::Vector2d(0.5, 1.5));
  for (uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const SpectralField u = random_field(grid, 2, rng, 20.0, grid.nyquist() - 1);
    for (int n : {0, 3, 10, 32}) {
      const SpectralField p = project_low_modes(u, n);
      EXPECT_LE((project_low_modes(p, n).coeffs() - p.coeffs()).norm(), 1e-14);
      const SpectralField pa = project_low_modes(apply_A(u, D), n);
      const SpectralField ap = apply_A(p, D);
      EXPECT_LE((pa.coeffs() - ap.coeffs()).norm(), 1e-13 * std::max(1.0, pa.coeffs().norm()));
    }
  }
}

TEST(Derivatives, Examples) {
  Grid grid(32);
  const SpectralField s =
      to_spectral(grid, sample(grid, 1, [](int, double x) { return std::sin(2 * kPi * x); }));
  const NodalArray ds = to_nodal(dx(s));
  for (int i = 0; i < 32; ++i) EXPECT_NEAR(ds(0, i), 2 * kPi * std::cos(2 * kPi * grid.x(i)), 1e-12);
  const SpectralField c = to_spectral(grid, NodalArray::Constant(1, 32, 4.0));
  EXPECT_LT(to_nodal(dx(c)).norm(), 1e-14);
  EXPECT_LT(to_nodal(dxx(c)).norm(), 1e-14);
}

TEST(Derivatives, SecondEqualsFirstTwice) {
  Grid grid(128);
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const SpectralField u = band_limited(grid, 2, seed);
    const NodalArray a = to_nodal(dxx(u));
    const NodalArray b = to_nodal(dx(dx(u)));
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-11 * std::max(1.0, a.cwiseAbs().maxCoeff()));
  }
}

TEST(Snapshot, RoundTripAndStableBytes) {
  Grid grid(32);
  const SpectralField u = band_limited(grid, 2, 9);
  const DiffusionMatrix D(Eigen::Vector2d(0.25, 1.0));
  const auto path = std::filesystem::temp_directory_path() / "rdc_snapshot_test.bin";
  write_snapshot(path, u, 0.8, D);
  EXPECT_EQ(std::filesystem::file_size(path), 4u + 4u + 8u + 2 * 8u + 2 * 32 * 8u);
  const Snapshot s = read_snapshot(path);
  EXPECT_EQ(s.alpha, 0.8);
  EXPECT_EQ(s.D.values(), D.values());
  EXPECT_LE((to_nodal(s.field) - to_nodal(u)).cwiseAbs().maxCoeff(), 1e-14);
  const auto again = std::filesystem::temp_directory_path() / "rdc_snapshot_test2.bin";
  write_snapshot(again, u, 0.8, D);
  std::ifstream a(path, std::ios::binary), b(again, std::ios::binary);
  const std::string bytes_a((std::istreambuf_iterator<char>(a)), {});
  const std::string bytes_b((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(bytes_a, bytes_b);
  std::filesystem::remove(path);
  std::filesystem::remove(again);
}
