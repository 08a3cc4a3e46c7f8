#pragma once

#include "rdc/rdc_model.hpp"
#include "rdc/spectral_grid.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace rdc {

enum class Scheme { etdrk4, imex_cnab2 };

Scheme parse_scheme(const std::string& name);
std::string scheme_name(Scheme s);

struct IntegratorConfig {
  double dt = 1e-3;
  Scheme scheme = Scheme::etdrk4;
  double t_transient = 4.0;
  double t_sample = 4.0;
  int n_snapshots = 32;
  uint64_t seed = 1;
  int n_trajectories = 4;
  /// Minimum snapshot spacing in units of dt.
  int decorrelation_steps = 50;
  /// alpha-norm radius of the random initial fields used for sampling. A small
  /// radius starts trajectories next to the origin, so they follow its
  /// unstable manifold, which is part of the attractor.
  double init_radius = 1e-3;
  double alpha = 0.8;
  double blow_up = 1e6;
  /// Length of each dissipativity probe trajectory.
  double t_probe = 10.0;
  int probes_per_radius = 3;
  /// Dirichlet hull points drawn per snapshot.
  int hull_per_snapshot = 2;

  void validate() const;
};

/// Time stepper for u_t = -A u + F(u). The linear part is diagonal in Fourier
/// space and handled exactly (ETDRK4) or by Crank-Nicolson (IMEX-CNAB2).
class Stepper {
 public:
  Stepper(const RDCSystem& sys, const Grid& grid, double dt, Scheme scheme,
          double blow_up = 1e6);

  /// Advances one step. CNAB2 keeps the previous nonlinear term; the first
  /// step after construction or reset() uses a CN/forward-Euler start.
  SpectralField step(const SpectralField& u);
  void reset() { has_history_ = false; }
  double dt() const { return dt_; }
  /// Advances u by n steps, checking for blow-up after each one.
  SpectralField advance(const SpectralField& u, long n_steps, double t0 = 0.0);

 private:
  SpectralField step_etdrk4(const SpectralField& u);
  SpectralField step_cnab2(const SpectralField& u);
  SpectralField scale(const Eigen::MatrixXd& factor, const SpectralField& u) const;
  void check(const SpectralField& u, double t) const;

  const RDCSystem& sys_;
  Grid grid_;
  double dt_;
  Scheme scheme_;
  double blow_up_;
  // per-mode coefficients, m x (N/2+1)
  Eigen::MatrixXd E_, E2_, Q_, f1_, f2_, f3_;
  Eigen::MatrixXd cn_plus_, cn_minus_inv_;
  bool has_history_ = false;
  Eigen::MatrixXcd prev_N_;
  mutable double t_ = 0.0;
};

/// Single step from a fresh stepper.
SpectralField step(const RDCSystem& sys, const SpectralField& u, double dt,
                   Scheme scheme = Scheme::etdrk4);

/// Integrates to time t with steps of size dt (t/dt rounded to an integer).
SpectralField integrate(const RDCSystem& sys, const SpectralField& u, double t, double dt,
                        Scheme scheme = Scheme::etdrk4);

struct TrajectoryProbe {
  double radius = 0.0;
  uint64_t seed = 0;
  std::vector<double> times;
  std::vector<double> norms;
  bool failed = false;
  std::string fault;
  double t_entry = -1.0;
};

struct DissipativityReport {
  std::vector<TrajectoryProbe> probes;
  bool entered_ball = false;
  double absorbing_radius = 0.0;
};

/// Random field with sobolev_norm(., alpha, D) equal to radius.
SpectralField random_initial(const Grid& grid, const RDCSystem& sys, double radius, double alpha,
                             uint64_t seed);

DissipativityReport probe_dissipativity(const RDCSystem& sys, const Grid& grid,
                                        const std::vector<double>& radii,
                                        const IntegratorConfig& config);

struct HullPoint {
  std::vector<int> members;
  std::vector<double> weights;
  SpectralField field;
};

struct AttractorSample {
  std::vector<SpectralField> snapshots;
  std::vector<double> times;
  std::vector<int> trajectory;
  std::vector<std::pair<int, int>> pair_index;
  std::vector<HullPoint> hull_points;
  double norm_alpha_max = 0.0;
  double diameter = 0.0;
  bool degenerate = false;
};

AttractorSample sample_attractor(const RDCSystem& sys, const Grid& grid,
                                 const IntegratorConfig& config);

/// Rebuilds pair_index and hull points for a given snapshot list.
void complete_sample(AttractorSample& sample, const RDCSystem& sys, const IntegratorConfig& config);

struct FlowPairHistory {
  std::vector<double> times;
  std::vector<SpectralField> u;
  std::vector<SpectralField> v;
};

/// Synchronised trajectories of u and v, recorded every record_every steps
/// (and at t = 0).
FlowPairHistory flow_pair(const RDCSystem& sys, const SpectralField& u, const SpectralField& v,
                          double t_max, double dt, Scheme scheme = Scheme::etdrk4,
                          int record_every = 1);

/// Snapshot store: snapshot_NNNN.bin files plus manifest.json.
void write_store(const std::filesystem::path& dir, const AttractorSample& sample, double alpha,
                 const DiffusionMatrix& D, const Json& manifest_extra);
AttractorSample read_store(const std::filesystem::path& dir, Json* manifest = nullptr);

}  // namespace rdc
