#pragma once

#include "rdc/linalg.hpp"
#include "rdc/rdc_model.hpp"
#include "rdc/spectral_grid.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace rdc {

/// Matrix-valued function of x in [0,1] sampled at x_i = i/N. Periodic curves
/// hold N values; Cauchy-solution curves (U, V) hold N+1 values, the last one
/// at x = 1.
struct MatrixCurve {
  std::string kind;
  int m = 0;
  bool periodic = true;
  std::vector<Mat> values;

  int n_nodes() const { return static_cast<int>(values.size()); }
  /// Number of grid intervals on [0,1].
  int n_intervals() const { return periodic ? n_nodes() : n_nodes() - 1; }
  double x(int i) const { return static_cast<double>(i) / n_intervals(); }
  /// Value at x = 1 (wraps for periodic curves).
  const Mat& at_one() const { return periodic ? values.front() : values.back(); }
};

/// Gauss-Legendre nodes and weights on [0,1].
struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};
Quadrature gauss_legendre_01(int n);

/// B(x) = int_0^1 f(x, tau u + (1-tau) v) dtau.
MatrixCurve build_B(const RDCSystem& sys, const SpectralField& u, const SpectralField& v,
                    int n_quad = 16);
/// B0(x) = -E + int_0^1 (f_u(x,w) w_x + g_u(x,w)) dtau.
MatrixCurve build_B0(const RDCSystem& sys, const SpectralField& u, const SpectralField& v,
                     int n_quad = 16);
/// Entry-wise spectral derivative of a periodic curve.
MatrixCurve curve_dx(const MatrixCurve& M);
/// Q = B0 - B_x / 2 - B D^{-1} B / 4.
MatrixCurve build_Q(const MatrixCurve& B0, const MatrixCurve& B, const DiffusionMatrix& D);

struct Linearization {
  MatrixCurve B;
  MatrixCurve B0;
  MatrixCurve Q;
  /// Max change of B and B0 when the tau rule is doubled (negative if not checked).
  double quadrature_change = -1.0;
  bool quadrature_flag = false;
};

Linearization linearize(const RDCSystem& sys, const SpectralField& u, const SpectralField& v,
                        int n_quad = 16, bool check_doubling = false);

/// Periodic trigonometric interpolation of every entry onto n_out uniform nodes.
MatrixCurve resample_periodic(const MatrixCurve& M, int n_out);
/// Entry (r,c) of the trigonometric interpolant at arbitrary x.
Mat evaluate_curve(const MatrixCurve& M, double x);

/// Trigonometric interpolant of a periodic curve, evaluated at arbitrary x
/// without re-transforming.
class CurveInterpolant {
 public:
  explicit CurveInterpolant(const MatrixCurve& M);
  int m() const { return m_; }
  Mat operator()(double x) const;

 private:
  int m_;
  int n_;
  // spectra_[r * m + c] holds the half spectrum of entry (r, c)
  std::vector<Eigen::VectorXcd> spectra_;
};

/// Pointwise product M(x) h(x), formed on the padded grid.
SpectralField apply_curve(const MatrixCurve& M, const SpectralField& h);
/// T0 h = omega h + Q h.
SpectralField apply_T0(const MatrixCurve& Q, double omega, const SpectralField& h);
/// R h = D h_xx + B0 h + B h_x.
SpectralField apply_R(const DiffusionMatrix& D, const MatrixCurve& B0, const MatrixCurve& B,
                      const SpectralField& h);

/// Debug dump: uint32 m, uint32 n_nodes, then n_nodes row-major m x m float64 blocks.
void write_curve(const std::filesystem::path& path, const MatrixCurve& M);

}  // namespace rdc
