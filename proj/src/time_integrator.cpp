#include "rdc/time_integrator.hpp"

#include "rdc/errors.hpp"
#include "rdc/parallel.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

namespace rdc {

namespace {

constexpr int kContourPoints = 32;

double max_abs_nodal(const SpectralField& u) {
  const NodalArray v = to_nodal(u);
  if (!v.allFinite()) return std::numeric_limits<double>::infinity();
  return v.cwiseAbs().maxCoeff();
}

std::string snapshot_name(size_t i) {
  std::ostringstream os;
  os << "snapshot_" << std::setw(4) << std::setfill('0') << i << ".bin";
  return os.str();
}

}  // namespace

Scheme parse_scheme(const std::string& name) {
  if (name == "etdrk4" || name == "ETDRK4") return Scheme::etdrk4;
  if (name == "imex_cnab2" || name == "IMEX-CNAB2" || name == "cnab2") return Scheme::imex_cnab2;
  throw ConfigError("unknown scheme '" + name + "'");
}

std::string scheme_name(Scheme s) { return s == Scheme::etdrk4 ? "etdrk4" : "imex_cnab2"; }

void IntegratorConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (t_transient < 0.0 || t_sample < 0.0) throw ConfigError("times must be nonnegative");
  if (n_snapshots < 1) throw ConfigError("n_snapshots must be >= 1");
  if (n_trajectories < 1) throw ConfigError("n_trajectories must be >= 1");
  if (decorrelation_steps < 1) throw ConfigError("decorrelation_steps must be >= 1");
  if (!(init_radius > 0.0)) throw ConfigError("init_radius must be positive");
  if (alpha < 0.0) throw ConfigError("alpha must be nonnegative");
  if (!(t_probe > 0.0)) throw ConfigError("t_probe must be positive");
}

Stepper::Stepper(const RDCSystem& sys, const Grid& grid, double dt, Scheme scheme, double blow_up)
    : sys_(sys), grid_(grid), dt_(dt), scheme_(scheme), blow_up_(blow_up) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  const int m = sys.m();
  const int K = grid.n_modes();
  E_.resize(m, K);
  E2_.resize(m, K);
  Q_.resize(m, K);
  f1_.resize(m, K);
  f2_.resize(m, K);
  f3_.resize(m, K);
  cn_plus_.resize(m, K);
  cn_minus_inv_.resize(m, K);
  std::vector<std::complex<double>> roots(kContourPoints);
  for (int l = 0; l < kContourPoints; ++l)
    roots[l] = std::polar(1.0, 2.0 * std::numbers::pi * (l + 0.5) / kContourPoints);
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < K; ++k) {
      const double L = -symbol_A(sys.D()[j], k);
      const double z = dt * L;
      E_(j, k) = std::exp(z);
      E2_(j, k) = std::exp(0.5 * z);
      std::complex<double> q = 0.0, a = 0.0, b = 0.0, c = 0.0;
      for (const auto& r : roots) {
        const std::complex<double> w = z + r;
        const std::complex<double> ew = std::exp(w);
        const std::complex<double> w3 = w * w * w;
        q += (std::exp(0.5 * w) - 1.0) / w;
        a += (-4.0 - w + ew * (4.0 - 3.0 * w + w * w)) / w3;
        b += (2.0 + w + ew * (w - 2.0)) / w3;
        c += (-4.0 - 3.0 * w - w * w + ew * (4.0 - w)) / w3;
      }
      Q_(j, k) = dt * q.real() / kContourPoints;
      f1_(j, k) = dt * a.real() / kContourPoints;
      f2_(j, k) = dt * b.real() / kContourPoints;
      f3_(j, k) = dt * c.real() / kContourPoints;
      cn_plus_(j, k) = 1.0 + 0.5 * z;
      cn_minus_inv_(j, k) = 1.0 / (1.0 - 0.5 * z);
    }
  }
}

SpectralField Stepper::scale(const Eigen::MatrixXd& factor, const SpectralField& u) const {
  SpectralField out = u;
  out.coeffs() = u.coeffs().cwiseProduct(factor.cast<std::complex<double>>());
  return out;
}

SpectralField Stepper::step_etdrk4(const SpectralField& u) {
  const SpectralField Nu = eval_F(sys_, u);
  const SpectralField a = scale(E2_, u) + scale(Q_, Nu);
  const SpectralField Na = eval_F(sys_, a);
  const SpectralField b = scale(E2_, u) + scale(Q_, Na);
  const SpectralField Nb = eval_F(sys_, b);
  const SpectralField c = scale(E2_, a) + scale(Q_, 2.0 * Nb - Nu);
  const SpectralField Nc = eval_F(sys_, c);
  return scale(E_, u) + scale(f1_, Nu) + scale(f2_, 2.0 * (Na + Nb)) + scale(f3_, Nc);
}

SpectralField Stepper::step_cnab2(const SpectralField& u) {
  const SpectralField Nu = eval_F(sys_, u);
  Eigen::MatrixXcd rhs = u.coeffs().cwiseProduct(cn_plus_.cast<std::complex<double>>());
  if (has_history_)
    rhs += dt_ * (1.5 * Nu.coeffs() - 0.5 * prev_N_);
  else
    rhs += dt_ * Nu.coeffs();
  prev_N_ = Nu.coeffs();
  has_history_ = true;
  return SpectralField(grid_, rhs.cwiseProduct(cn_minus_inv_.cast<std::complex<double>>()));
}

void Stepper::check(const SpectralField& u, double t) const {
  const double norm = max_abs_nodal(u);
  if (!(norm <= blow_up_)) throw DivergenceFault(t, norm);
}

SpectralField Stepper::step(const SpectralField& u) {
  if (!(u.grid() == grid_) || u.m() != sys_.m())
    throw SizeMismatch("field does not match stepper grid");
  SpectralField out = u;
  try {
    out = scheme_ == Scheme::etdrk4 ? step_etdrk4(u) : step_cnab2(u);
  } catch (const EvaluationFault& e) {
    double peak = 0.0;
    for (double v : e.u()) peak = std::max(peak, std::abs(v));
    if (!(peak <= blow_up_)) throw DivergenceFault(t_ + dt_, peak);
    throw;
  }
  t_ += dt_;
  check(out, t_);
  return out;
}

SpectralField Stepper::advance(const SpectralField& u, long n_steps, double t0) {
  t_ = t0;
  SpectralField cur = u;
  for (long s = 0; s < n_steps; ++s) cur = step(cur);
  return cur;
}

SpectralField step(const RDCSystem& sys, const SpectralField& u, double dt, Scheme scheme) {
  Stepper stepper(sys, u.grid(), dt, scheme);
  return stepper.step(u);
}

SpectralField integrate(const RDCSystem& sys, const SpectralField& u, double t, double dt,
                        Scheme scheme) {
  if (t < 0.0) throw PreconditionError("integration time must be nonnegative");
  Stepper stepper(sys, u.grid(), dt, scheme);
  return stepper.advance(u, std::lround(t / dt));
}

SpectralField random_initial(const Grid& grid, const RDCSystem& sys, double radius, double alpha,
                             uint64_t seed) {
  std::mt19937_64 rng(seed);
  SpectralField u = random_field(grid, sys.m(), rng, 4.0, std::min(16, grid.nyquist() - 1));
  const double norm = sobolev_norm(u, alpha, sys.D());
  return (radius / norm) * u;
}

DissipativityReport probe_dissipativity(const RDCSystem& sys, const Grid& grid,
                                        const std::vector<double>& radii,
                                        const IntegratorConfig& config) {
  config.validate();
  for (double r : radii)
    if (!(r > 0.0)) throw PreconditionError("probe radii must be positive");
  DissipativityReport report;
  const int per = config.probes_per_radius;
  report.probes.resize(radii.size() * per);
  const long n_steps = std::lround(config.t_probe / config.dt);
  const long every = std::max(1L, std::lround(0.05 / config.dt));
  parallel_for(report.probes.size(), [&](size_t idx) {
    TrajectoryProbe& p = report.probes[idx];
    p.radius = radii[idx / per];
    p.seed = config.seed * 1000003ULL + idx;
    SpectralField u = random_initial(grid, sys, p.radius, config.alpha, p.seed);
    Stepper stepper(sys, grid, config.dt, config.scheme, config.blow_up);
    p.times.push_back(0.0);
    p.norms.push_back(sobolev_norm(u, config.alpha, sys.D()));
    try {
      for (long s = 0; s < n_steps; s += every) {
        const long chunk = std::min(every, n_steps - s);
        u = stepper.advance(u, chunk, s * config.dt);
        p.times.push_back((s + chunk) * config.dt);
        p.norms.push_back(sobolev_norm(u, config.alpha, sys.D()));
      }
    } catch (const Error& e) {
      p.failed = true;
      p.fault = e.what();
    }
  });

  bool ok = true;
  double a = 0.0;
  for (const auto& p : report.probes) {
    if (p.failed) {
      ok = false;
      continue;
    }
    const size_t half = p.norms.size() / 2;
    for (size_t i = half; i < p.norms.size(); ++i) a = std::max(a, p.norms[i]);
  }
  a *= 1.1;
  report.absorbing_radius = a;
  // the last quarter of every probe must stay inside the ball built from the
  // quarter before it over all probes
  double prev = 0.0;
  for (const auto& p : report.probes) {
    if (p.failed) continue;
    const size_t n = p.norms.size(), q = n / 4;
    for (size_t i = n - 2 * q; i < n - q; ++i) prev = std::max(prev, p.norms[i]);
  }
  for (auto& p : report.probes) {
    if (p.failed) continue;
    const size_t n = p.norms.size();
    size_t entry = n;
    while (entry > 0 && p.norms[entry - 1] <= a) --entry;
    p.t_entry = entry < n ? p.times[entry] : -1.0;
    double last = 0.0;
    for (size_t i = n - n / 4; i < n; ++i) last = std::max(last, p.norms[i]);
    if (entry >= n || last > 1.1 * prev + 1e-12) ok = false;
  }
  report.entered_ball = ok;
  return report;
}

void complete_sample(AttractorSample& sample, const RDCSystem& sys, const IntegratorConfig& config) {
  const int n = static_cast<int>(sample.snapshots.size());
  sample.pair_index.clear();
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) sample.pair_index.emplace_back(i, j);
  sample.norm_alpha_max = 0.0;
  sample.diameter = 0.0;
  for (int i = 0; i < n; ++i) {
    sample.norm_alpha_max =
        std::max(sample.norm_alpha_max, sobolev_norm(sample.snapshots[i], config.alpha, sys.D()));
    for (int j = i + 1; j < n; ++j)
      sample.diameter = std::max(
          sample.diameter,
          sobolev_norm(sample.snapshots[i] - sample.snapshots[j], config.alpha, sys.D()));
  }
  sample.degenerate = sample.diameter < 1e-8;

  sample.hull_points.clear();
  if (n < 2) return;
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  const int count = config.hull_per_snapshot * n;
  for (int h = 0; h < count; ++h) {
    const int size = (n >= 3 && h % 2 == 1) ? 3 : 2;
    std::vector<int> members;
    std::uniform_int_distribution<int> pick(0, n - 1);
    while (static_cast<int>(members.size()) < size) {
      const int c = pick(rng);
      if (std::find(members.begin(), members.end(), c) == members.end()) members.push_back(c);
    }
    std::vector<double> w(size);
    double total = 0.0;
    for (auto& wi : w) total += (wi = gamma(rng));
    for (auto& wi : w) wi /= total;
    SpectralField field = w[0] * sample.snapshots[members[0]];
    for (int s = 1; s < size; ++s) field += w[s] * sample.snapshots[members[s]];
    sample.hull_points.push_back(HullPoint{members, w, field});
  }
}

AttractorSample sample_attractor(const RDCSystem& sys, const Grid& grid,
                                 const IntegratorConfig& config) {
  config.validate();
  const int T = config.n_trajectories;
  std::vector<int> counts(T, config.n_snapshots / T);
  for (int i = 0; i < config.n_snapshots % T; ++i) ++counts[i];

  struct Run {
    std::vector<SpectralField> snaps;
    std::vector<double> times;
  };
  std::vector<Run> runs(T);
  parallel_for(T, [&](size_t i) {
    if (counts[i] == 0) return;
    const uint64_t seed = config.seed * 7919ULL + 104729ULL * (i + 1);
    SpectralField u = random_initial(grid, sys, config.init_radius, config.alpha, seed);
    Stepper stepper(sys, grid, config.dt, config.scheme, config.blow_up);
    const long transient = std::lround(config.t_transient / config.dt);
    u = stepper.advance(u, transient);
    const long spacing =
        std::max<long>(config.decorrelation_steps,
                       std::lround(config.t_sample / config.dt / counts[i]));
    long steps = transient;
    for (int s = 0; s < counts[i]; ++s) {
      u = stepper.advance(u, spacing, steps * config.dt);
      steps += spacing;
      runs[i].snaps.push_back(u);
      runs[i].times.push_back(steps * config.dt);
    }
  });

  AttractorSample sample;
  for (int i = 0; i < T; ++i) {
    for (size_t s = 0; s < runs[i].snaps.size(); ++s) {
      sample.snapshots.push_back(runs[i].snaps[s]);
      sample.times.push_back(runs[i].times[s]);
      sample.trajectory.push_back(i);
    }
  }
  complete_sample(sample, sys, config);
  return sample;
}

FlowPairHistory flow_pair(const RDCSystem& sys, const SpectralField& u, const SpectralField& v,
                          double t_max, double dt, Scheme scheme, int record_every) {
  if (t_max < 0.0) throw PreconditionError("t_max must be nonnegative");
  if (record_every < 1) throw PreconditionError("record_every must be >= 1");
  FlowPairHistory hist;
  hist.times.push_back(0.0);
  hist.u.push_back(u);
  hist.v.push_back(v);
  const long n_steps = std::lround(t_max / dt);
  Stepper su(sys, u.grid(), dt, scheme);
  Stepper sv(sys, v.grid(), dt, scheme);
  SpectralField cu = u, cv = v;
  for (long s = 0; s < n_steps; s += record_every) {
    const long chunk = std::min<long>(record_every, n_steps - s);
    cu = su.advance(cu, chunk, s * dt);
    cv = sv.advance(cv, chunk, s * dt);
    hist.times.push_back((s + chunk) * dt);
    hist.u.push_back(cu);
    hist.v.push_back(cv);
  }
  return hist;
}

void write_store(const std::filesystem::path& dir, const AttractorSample& sample, double alpha,
                 const DiffusionMatrix& D, const Json& manifest_extra) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create store directory " + dir.string() + ": " + ec.message());
  Json manifest = manifest_extra;
  manifest["alpha"] = alpha;
  manifest["d"] = std::vector<double>(D.values().data(), D.values().data() + D.m());
  Json snaps = Json::array();
  for (size_t i = 0; i < sample.snapshots.size(); ++i) {
    const std::string name = snapshot_name(i);
    write_snapshot(dir / name, sample.snapshots[i], alpha, D);
    snaps.push_back({{"file", name},
                     {"time", sample.times.empty() ? 0.0 : sample.times[i]},
                     {"trajectory", sample.trajectory.empty() ? 0 : sample.trajectory[i]}});
  }
  manifest["snapshots"] = snaps;
  Json hull = Json::array();
  for (const auto& h : sample.hull_points) hull.push_back({{"members", h.members}, {"weights", h.weights}});
  manifest["hull"] = hull;
  manifest["norm_alpha_max"] = sample.norm_alpha_max;
  manifest["diameter"] = sample.diameter;
  manifest["degenerate"] = sample.degenerate;
  std::ofstream os(dir / "manifest.json", std::ios::trunc);
  if (!os) throw IoError("cannot write manifest in " + dir.string());
  os << manifest.dump(2) << "\n";
}

AttractorSample read_store(const std::filesystem::path& dir, Json* manifest_out) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw IoError("no manifest.json in " + dir.string());
  Json manifest;
  try {
    is >> manifest;
  } catch (const Json::exception& e) {
    throw IoError(std::string("malformed manifest: ") + e.what());
  }
  AttractorSample sample;
  for (const auto& s : manifest.at("snapshots")) {
    Snapshot snap = read_snapshot(dir / s.at("file").get<std::string>());
    sample.snapshots.push_back(snap.field);
    sample.times.push_back(s.value("time", 0.0));
    sample.trajectory.push_back(s.value("trajectory", 0));
  }
  const int n = static_cast<int>(sample.snapshots.size());
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) sample.pair_index.emplace_back(i, j);
  for (const auto& h : manifest.value("hull", Json::array())) {
    HullPoint hp{h.at("members").get<std::vector<int>>(), h.at("weights").get<std::vector<double>>(),
                 SpectralField(sample.snapshots.at(0).grid(), sample.snapshots.at(0).m())};
    for (size_t s = 0; s < hp.members.size(); ++s)
      hp.field += hp.weights[s] * sample.snapshots.at(hp.members[s]);
    sample.hull_points.push_back(std::move(hp));
  }
  sample.norm_alpha_max = manifest.value("norm_alpha_max", 0.0);
  sample.diameter = manifest.value("diameter", 0.0);
  sample.degenerate = manifest.value("degenerate", false);
  if (manifest_out) *manifest_out = manifest;
  return sample;
}

}  // namespace rdc
