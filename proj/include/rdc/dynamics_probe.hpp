#pragma once

#include "rdc/linearization.hpp"
#include "rdc/monodromy.hpp"
#include "rdc/rdc_model.hpp"
#include "rdc/time_integrator.hpp"

#include <vector>

namespace rdc {

struct FlOptions {
  double t_max = 2.0;
  double dt = 1e-3;
  Scheme scheme = Scheme::etdrk4;
  /// Distances recorded every record_every steps.
  int record_every = 10;
  double alpha = 0.8;
  /// Pairs closer than this in the alpha-norm are excluded.
  double floor = 1e-8;
  int max_pairs = 16;
};

/// log(||u(t) - v(t)||_alpha / ||u - v||_alpha) for one pair.
struct FlSeries {
  int a = 0, b = 0;
  double d0 = 0.0;
  std::vector<double> t;
  std::vector<double> log_ratio;
};

struct FlReport {
  bool inconclusive = true;
  double M_est = 0.0;
  double kappa_est = 0.0;
  /// RMS gap between the envelope log M + kappa t and the data.
  double fit_residual = 0.0;
  int pairs_used = 0;
  int pairs_excluded = 0;
  std::vector<FlSeries> series;
};

/// Smallest envelope log M + kappa t (kappa >= 0) lying above every point,
/// with kappa chosen to minimise the squared gaps.
void fit_envelope(FlReport& report);

/// Forward-time Lipschitz envelope of the flow over attractor pairs.
FlReport probe_Fl(const RDCSystem& sys, const AttractorSample& sample, const FlOptions& opts = {});

struct GrFReport {
  int n_keep = 0;
  bool inconclusive = true;
  double min_ratio = 1.0;
  int arg_a = -1, arg_b = -1;
  /// 50 bins over [0,1].
  std::vector<int> histogram;
  int pairs = 0;
};

/// ||P(u-v)||_alpha / ||u-v||_alpha over snapshot pairs, P keeping |k| <= n_keep.
GrFReport probe_GrF(const AttractorSample& sample, int n_keep, double alpha, const DiffusionMatrix& D,
                    double floor = 1e-8);

/// probe_GrF for n_keep = 1 .. N/4.
std::vector<GrFReport> sweep_GrF(const AttractorSample& sample, double alpha, const DiffusionMatrix& D,
                                 double floor = 1e-8);

/// (T0 - T) h = omega h + Q h - (omega h - D U (U^{-1} h)_xx) at the nodes of
/// n_panels Chebyshev panels on [0,1] (n_cheb + 1 nodes each, panel ends
/// repeated). On each panel U starts from E at the left end. Rows are nodes.
struct PanelValues {
  std::vector<double> x;
  Eigen::MatrixXd values;
};
PanelValues assemble_T0_minus_T(const Linearization& lin, const DiffusionMatrix& D,
                                const SpectralField& h, double omega, int n_panels, int n_cheb,
                                const CauchyOptions& cauchy = {});

/// Panels such that max |1/2 D^{-1} B| times the panel width is at most 2/3 and
/// each panel spans at most 2/3 of a period of the highest significant mode of
/// h and of B.
int default_panels(const Linearization& lin, const DiffusionMatrix& D, const SpectralField& h);

/// Max over panel nodes of |(T0 - T)h - R h| divided by max |R h|.
double transformation_residual(const Linearization& lin, const DiffusionMatrix& D,
                               const SpectralField& h, double omega, int n_cheb = 16,
                               const CauchyOptions& cauchy = {});

struct DecompositionOptions {
  int n_quad = 16;
  int max_pairs = 8;
  /// Grid size the pairs are interpolated to first (0 keeps the sample grid).
  int refine_to = 0;
  /// Cross-check R h against the assembled (T0 - T) h when the monodromy
  /// certificate of the pair is positive.
  bool cross_check = true;
  /// Random fields h per pair for the cross-check, in addition to h = u - v.
  int random_h = 0;
  std::vector<double> omegas = {1.0, 8.0};
  int n_cheb = 16;
  uint64_t seed = 21;
  CauchyOptions cauchy;
};

struct DecompositionPair {
  int a = 0, b = 0;
  double dG_norm = 0.0;
  /// ||G(u) - G(v) - R h|| / ||G(u) - G(v)|| in L2 (0 when both vanish).
  double residual = 0.0;
  bool cross_checked = false;
  double transform_residual = 0.0;
  /// Largest change of (T0 - T) h across the omegas, relative to max |R h|.
  double omega_spread = 0.0;
};

struct DecompositionReport {
  std::vector<DecompositionPair> pairs;
  double max_residual = 0.0;
  double max_transform_residual = 0.0;
  double max_omega_spread = 0.0;
  int cross_checked = 0;
};

DecompositionReport probe_decomposition(const RDCSystem& sys, const AttractorSample& sample,
                                        const DecompositionOptions& opts = {});

Json to_json(const FlReport& r);
Json to_json(const GrFReport& r);
Json to_json(const DecompositionReport& r);

}  // namespace rdc
