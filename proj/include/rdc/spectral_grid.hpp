#pragma once

#include "rdc/linalg.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <filesystem>
#include <random>
#include <utility>

namespace rdc {

/// Uniform collocation grid on the unit circle J = R mod Z.
///
/// Nodes are x_i = i/N. Products of fields are evaluated on a padded grid of
/// size ceil(N / dealias_fraction) (3N/2 for the default 2/3 fraction) and
/// truncated back, which removes quadratic aliasing.
class Grid {
 public:
  explicit Grid(int n_points, int dealias_num = 2, int dealias_den = 3);

  int size() const { return n_; }
  int n_modes() const { return n_ / 2 + 1; }
  int nyquist() const { return n_ / 2; }
  double x(int i) const { return static_cast<double>(i) / n_; }
  int padded_size() const { return padded_; }
  /// Largest |k| kept by the 2/3-style truncation.
  int dealias_cutoff() const;
  std::pair<int, int> dealias_fraction() const { return {num_, den_}; }

  bool operator==(const Grid& other) const {
    return n_ == other.n_ && num_ == other.num_ && den_ == other.den_;
  }

 private:
  int n_;
  int num_;
  int den_;
  int padded_;
};

/// D = diag{d_j}, d_j > 0.
class DiffusionMatrix {
 public:
  DiffusionMatrix() = default;
  explicit DiffusionMatrix(Eigen::VectorXd d);
  static DiffusionMatrix scalar(int m, double d);

  int m() const { return static_cast<int>(d_.size()); }
  double operator[](int j) const { return d_[j]; }
  const Eigen::VectorXd& values() const { return d_; }
  bool is_scalar() const;
  Mat matrix() const;
  Mat inverse() const;

 private:
  Eigen::VectorXd d_;
};

/// m x N array of nodal values; row j holds component j.
using NodalArray = Eigen::MatrixXd;

/// Real periodic vector field stored as its half Fourier spectrum.
///
/// coeffs(j, k) for k = 0..N/2 is the coefficient of e^{2 pi i k x} of
/// component j, normalised so that a constant field c has coeffs(j, 0) = c and
/// cos(2 pi x) has coeffs(j, 1) = 1/2. Negative wavenumbers follow from
/// conjugate symmetry; the Nyquist entry is real.
class SpectralField {
 public:
  SpectralField(const Grid& grid, int m);
  SpectralField(const Grid& grid, Eigen::MatrixXcd coeffs);

  const Grid& grid() const { return grid_; }
  int m() const { return static_cast<int>(coeffs_.rows()); }
  const Eigen::MatrixXcd& coeffs() const { return coeffs_; }
  Eigen::MatrixXcd& coeffs() { return coeffs_; }

  /// Coefficient for any wavenumber k in (-N/2, N/2].
  std::complex<double> coeff(int j, int k) const;

  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator-=(const SpectralField& other);
  SpectralField& operator*=(double s);

 private:
  void check_compatible(const SpectralField& other) const;

  Grid grid_;
  Eigen::MatrixXcd coeffs_;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double s, SpectralField a);

NodalArray to_nodal(const SpectralField& field);
SpectralField to_spectral(const Grid& grid, const NodalArray& nodal);

/// Trigonometric interpolation of the field onto a uniform grid of n_out points.
NodalArray to_nodal_on(const SpectralField& field, int n_out);
/// Transforms nodal values on the padded grid and keeps |k| < N/2 (Nyquist dropped).
SpectralField from_padded(const Grid& grid, const NodalArray& padded);

/// Per-mode symbol 1 + d (2 pi k)^2 of A u = u - D u_xx.
double symbol_A(double d, int k);
SpectralField apply_A(const SpectralField& u, const DiffusionMatrix& D);
/// ||A^alpha u|| in L^2(J, R^m).
double sobolev_norm(const SpectralField& u, double alpha, const DiffusionMatrix& D);
SpectralField project_low_modes(const SpectralField& u, int n_keep);
/// Zeroes |k| > grid.dealias_cutoff().
SpectralField truncate_dealias(const SpectralField& u);
SpectralField dx(const SpectralField& u);
SpectralField dxx(const SpectralField& u);

/// Value of component j of the trigonometric interpolant at arbitrary x.
double evaluate_at(const SpectralField& u, int j, double x);

/// Random smooth real field: coefficients ~ N(0,1) * exp(-|k| / decay) for
/// 1 <= |k| <= max_mode, plus a random mean.
SpectralField random_field(const Grid& grid, int m, std::mt19937_64& rng, double decay,
                           int max_mode);

/// Forward/inverse real FFT for a single periodic scalar signal, same
/// normalisation as SpectralField.
Eigen::VectorXcd forward_real(const Eigen::VectorXd& values);
Eigen::VectorXd inverse_real(const Eigen::VectorXcd& half_spectrum, int n_out);

/// Nodal snapshot file: uint32 m, uint32 N, float64 alpha, float64 d[m], then
/// m*N float64 nodal values in row-major (component-major) order. All fields
/// little-endian.
struct Snapshot {
  SpectralField field;
  double alpha;
  DiffusionMatrix D;
};

void write_snapshot(const std::filesystem::path& path, const SpectralField& field, double alpha,
                    const DiffusionMatrix& D);
Snapshot read_snapshot(const std::filesystem::path& path, int dealias_num = 2,
                       int dealias_den = 3);

}  // namespace rdc
