#pragma once

#include "rdc/chebyshev.hpp"
#include "rdc/linalg.hpp"
#include "rdc/linearization.hpp"
#include "rdc/rdc_model.hpp"

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace rdc {

/// RK4 settings for the Cauchy problems on [0,1].
struct CauchyOptions {
  /// Minimum RK4 steps per collocation interval; more are used when
  /// max |D^{-1} B| is large.
  int substeps = 4;
  /// Richardson error tolerance relative to max(1, max |U|).
  double tolerance = 1e-8;
  /// Number of times substeps may be doubled before giving up.
  int max_refinements = 1;
};

/// Fundamental solutions on [0,1] for a periodic generator B:
/// U_x = -1/2 D^{-1} B U and V_x = 1/2 V D^{-1} B, U(0) = V(0) = E.
class FundamentalSolution {
 public:
  FundamentalSolution(const MatrixCurve& B, const DiffusionMatrix& D, CauchyOptions opts = {});

  /// Values at sorted points in [x0,1] of the solutions with U(x0) = V(x0) = E.
  std::vector<Mat> U_at(const std::vector<double>& xs, double x0 = 0.0) const;
  std::vector<Mat> V_at(const std::vector<double>& xs, double x0 = 0.0) const;
  /// D^{-1} B at x (trigonometric interpolation).
  Mat generator(double x) const { return Dinv_ * B_(x); }
  /// Richardson estimate from the last solve.
  double error_estimate() const { return error_; }
  int substeps() const { return substeps_; }

 private:
  std::vector<Mat> run(const std::vector<double>& xs, bool left, int substeps, double x0) const;
  std::vector<Mat> solve(const std::vector<double>& xs, bool left, double x0) const;

  CurveInterpolant B_;
  Mat Dinv_;
  int n_intervals_;
  CauchyOptions opts_;
  int initial_substeps_ = 4;
  mutable double error_ = 0.0;
  mutable int substeps_ = 0;
};

/// U (resp. V) at x_i = i/N, i = 0..N. Throws StepSizeFailure when the
/// Richardson estimate stays above tolerance after refinement.
MatrixCurve solve_U(const MatrixCurve& B, const DiffusionMatrix& D, CauchyOptions opts = {},
                    double* error_estimate = nullptr);
MatrixCurve solve_V(const MatrixCurve& B, const DiffusionMatrix& D, CauchyOptions opts = {},
                    double* error_estimate = nullptr);

/// Largest ||[W(x_i), W(x_j)]|| over all node pairs divided by max ||W||^2.
double relative_commutator(const MatrixCurve& W);

/// U(x) = C exp(-1/2 int_0^x W) C^{-1} at x_i = i/N, i = 0..N, for a
/// pairwise commuting periodic W. Throws PreconditionError when
/// relative_commutator(W) exceeds tol.
MatrixCurve explicit_U_commuting(const MatrixCurve& W, const Mat& C, double tol = 1e-10);

/// W = C^{-1} D^{-1} B C node by node.
MatrixCurve conjugate_generator(const MatrixCurve& B, const DiffusionMatrix& D, const Mat& C);

struct LogSeries {
  Mat log;
  double b = 0.0;
  double delta = 0.0;
  int terms = 0;
  /// Square roots taken before summing; log = 2^roots * (series of the root).
  int roots = 0;
  /// Geometric bound on the truncated tail: kappa * delta^(n+1) / ((n+1)(1-delta)),
  /// scaled by 2^roots, with kappa the eigenvector condition number.
  double tail_bound = 0.0;
};

/// ln V = ln(b) E + sum_{n>=1} (-1)^{n+1} X^n / n with X = V/b - E.
/// The spectrum of V must be real with 0 < mu < b. b <= 0 selects b = 2 max mu.
/// If the series would need more than max_terms terms, square roots of V
/// are taken first (only when b is automatic). Throws DomainFault.
LogSeries matrix_log_series(const Mat& V, double b = 0.0, int max_terms = 500);

/// V^{-x} = exp(-x ln V).
Mat fractional_power(const Mat& V, double x);

enum class PdVerdict { positive_definite, similar_positive_definite, diagonal_positive_definite, failed };
enum class PdRoute { none, remark42a, remark42b, similarity_445, direct_symmetric_eig };

std::string to_string(PdVerdict v);
std::string to_string(PdRoute r);

struct MonodromyCertificate {
  Mat U1, V1;
  Mat C;
  /// C^{-1} V1 C
  Mat V_script;
  Eigen::VectorXcd mu;
  Mat phi;
  Mat logV;
  double b = 0.0, delta = 0.0, c1 = 0.0, c2 = 0.0;
  int log_terms = 0, log_roots = 0;
  double log_tail_bound = 0.0;
  PdVerdict verdict = PdVerdict::failed;
  PdRoute route = PdRoute::none;
  /// Structural flags, recorded even when an earlier route already succeeded.
  bool remark42a_holds = false;
  bool remark42b_holds = false;
  double pairing_error = 0.0;
  double ode_error = 0.0;
  std::string note;

  bool positive() const { return verdict != PdVerdict::failed; }
};

/// Tries the positive-definiteness routes in order: symmetric commuting
/// generator, transpose-reflection generator, common eigenbasis C_hint, direct
/// symmetric eigenvalue test of V1.
MonodromyCertificate certify_pd(const MatrixCurve& B, const DiffusionMatrix& D,
                                const std::optional<Mat>& C_hint = std::nullopt,
                                CauchyOptions opts = {});

Json to_json(const MonodromyCertificate& cert);

struct LatticePoint {
  int pair = 0;
  int k = 0;
  int j = 0;
  /// Diffusion coefficient along the eigendirection.
  double d = 0.0;
  std::complex<double> lambda;
};

struct Strip {
  int index = 0;
  double a = 0.0;
  double xi = 0.0;
};

enum class GapVerdict { consistent, not_consistent, inconclusive };
std::string to_string(GapVerdict v);

struct SpectrumReport {
  double omega = 0.0;
  int K = 0;
  std::vector<LatticePoint> lambda;
  double c = 0.0;
  double theta = 0.5;
  bool in_sector = false;
  std::vector<Strip> strips;
  double beta = 0.0;
  GapVerdict gap = GapVerdict::inconclusive;
  bool gap_ok = false;
  /// a_k^beta / xi_k over the tested range.
  std::vector<double> ratios;
};

/// beta = alpha/2 if theta <= alpha/2, else (alpha + theta)/3.
double beta_rule(double alpha, double theta = 0.5);

/// lambda_{k,j} = omega - d_j (ln mu_j + 2 pi k i)^2 for |k| <= K. Nonscalar D
/// needs a diagonal certificate (RouteMismatch otherwise).
SpectrumReport eig_lattice(const MonodromyCertificate& cert, const DiffusionMatrix& D,
                           double omega, int K);
/// Union of the lattices of several certificates (pair ids are list indices).
SpectrumReport eig_lattice(const std::vector<MonodromyCertificate>& certs,
                           const DiffusionMatrix& D, double omega, int K);

/// Smallest omega in {1, 2, 4, ...} with Re lambda >= 1 and the lattice inside
/// the sector for every certificate.
double choose_omega(const std::vector<MonodromyCertificate>& certs, const DiffusionMatrix& D,
                    int K = 8);

/// Finds the spectrum-free strips between real-part clusters and tests the
/// decay of a_k^beta / xi_k over the top half of strips.
void gap_check(SpectrumReport& report, double alpha, const DiffusionMatrix& D);

Json to_json(const SpectrumReport& report);

/// psi_{k,j}(x) = exp((ln mu_j + 2 pi k i) x) C phi_j.
struct H0Eigenpair {
  int k = 0;
  int j = 0;
  std::complex<double> lambda;
  std::complex<double> exponent;
  Eigen::VectorXcd direction;

  Eigen::VectorXcd operator()(double x) const { return std::exp(exponent * x) * direction; }
};

std::vector<H0Eigenpair> build_H0_eigenpairs(const MonodromyCertificate& cert,
                                             const DiffusionMatrix& D, double omega,
                                             const std::vector<int>& k_list);

/// Eigenvalues of omega - D d_xx on [0,1] with eta(1) = V1 eta(0) and
/// eta_x(1) = V1 eta_x(0), by Chebyshev collocation with n+1 nodes.
std::vector<std::complex<double>> collocation_spectrum(const Mat& V1, const DiffusionMatrix& D,
                                                       double omega, int n);

}  // namespace rdc
