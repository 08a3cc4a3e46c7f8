// Acceptance run: one [PASS]/[FAIL] line per criterion, nonzero exit on any failure.

#include "rdc/certifier.hpp"
#include "rdc/chebyshev.hpp"
#include "rdc/dynamics_probe.hpp"
#include "rdc/monodromy.hpp"
#include "rdc/reporting.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <unistd.h>

using namespace rdc;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

MatrixCurve curve(int N, int m, const std::function<Mat(double)>& fn) {
  MatrixCurve c;
  c.m = m;
  for (int i = 0; i < N; ++i) c.values.push_back(fn(static_cast<double>(i) / N));
  return c;
}

MatrixCurve random_curve(int N, int m, std::mt19937_64& rng, double amp) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Mat> a(4), b(4);
  for (int k = 0; k < 4; ++k) {
    a[k] = Mat::NullaryExpr(m, m, [&] { return g(rng); }) * amp / (1 + k);
    b[k] = Mat::NullaryExpr(m, m, [&] { return g(rng); }) * amp / (1 + k);
  }
  return curve(N, m, [&](double x) {
    Mat out = a[0];
    for (int k = 1; k < 4; ++k) out += a[k] * std::cos(2 * kPi * k * x) + b[k] * std::sin(2 * kPi * k * x);
    return out;
  });
}

DiffusionMatrix random_diffusion(int m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.3, 2.0);
  Eigen::VectorXd d(m);
  for (int j = 0; j < m; ++j) d[j] = u(rng);
  return DiffusionMatrix(d);
}

Mat random_spd(int m, double cond, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  const Mat Q = Eigen::HouseholderQR<Mat>(Mat::NullaryExpr(m, m, [&] { return g(rng); })).householderQ();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd ev(m);
  for (int j = 0; j < m; ++j) ev[j] = std::pow(cond, u(rng));
  ev[0] = 1.0;
  ev[m - 1] = cond;
  return 0.37 * Q * ev.asDiagonal() * Q.transpose();
}

MonodromyCertificate exact_diagonal_certificate(const Eigen::VectorXd& mu) {
  const int m = static_cast<int>(mu.size());
  MonodromyCertificate cert;
  cert.V1 = mu.asDiagonal();
  cert.U1 = cert.V1.inverse();
  cert.C = Mat::Identity(m, m);
  cert.V_script = cert.V1;
  cert.mu = mu.cast<std::complex<double>>();
  cert.phi = Mat::Identity(m, m);
  cert.verdict = PdVerdict::diagonal_positive_definite;
  return cert;
}

// Commuting family B = D C W(x) C^{-1} with W diagonal.
struct CommutingFamily {
  MatrixCurve B;
  Mat C;
  DiffusionMatrix D;
};

CommutingFamily commuting_family(int m, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CommutingFamily f;
  f.C = Mat::NullaryExpr(m, m, [&] { return g(rng); }) + 2.0 * Mat::Identity(m, m);
  f.D = DiffusionMatrix::scalar(m, 0.5);
  Eigen::VectorXd a0(m), a1(m), a2(m);
  for (int j = 0; j < m; ++j) {
    a0[j] = g(rng);
    a1[j] = g(rng);
    a2[j] = g(rng);
  }
  const Mat Cinv = f.C.inverse();
  f.B = curve(64, m, [&](double x) {
    Eigen::VectorXd w = a0 + a1 * std::cos(2 * kPi * x) + a2 * std::sin(4 * kPi * x);
    return (f.D.matrix() * f.C * w.asDiagonal() * Cinv).eval();
  });
  return f;
}

double liouville_error(const MatrixCurve& B, const DiffusionMatrix& D) {
  const MatrixCurve U = solve_U(B, D);
  double mean_trace = 0.0;
  for (const Mat& b : B.values) mean_trace += (D.inverse() * b).trace();
  mean_trace /= B.n_nodes();
  const double expected = std::exp(-0.5 * mean_trace);
  return std::abs(U.at_one().determinant() - expected) / expected;
}

std::map<std::string, AttractorSample>& sample_cache() {
  static std::map<std::string, AttractorSample> cache;
  return cache;
}

const AttractorSample& sample_of(const std::string& name) {
  auto& cache = sample_cache();
  auto it = cache.find(name);
  if (it == cache.end())
    it = cache.emplace(name, sample_attractor(builtin(name), Grid(128), IntegratorConfig{})).first;
  return it->second;
}

// AC1
Outcome inverse_pairing() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const int m = 1 + i % 4;
    const MatrixCurve B = random_curve(64, m, rng, 1.0);
    const DiffusionMatrix D = random_diffusion(m, rng);
    const MatrixCurve U = solve_U(B, D), V = solve_V(B, D);
    for (int n = 0; n < U.n_nodes(); ++n)
      worst = std::max(worst, (U.values[n] * V.values[n] - Mat::Identity(m, m)).norm());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {worst <= 1e-9 && secs < 10.0, "max |UV - E| = " + sci(worst) + ", " + sci(secs) + " s"};
}

// AC2
Outcome commuting_fast_path() {
  std::mt19937_64 rng(102);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto f = commuting_family(2 + i % 3, rng);
    const MatrixCurve Ue = explicit_U_commuting(conjugate_generator(f.B, f.D, f.C), f.C);
    const MatrixCurve Ur = solve_U(f.B, f.D);
    for (int n = 0; n < Ue.n_nodes(); ++n) worst = std::max(worst, (Ue.values[n] - Ur.values[n]).norm());
  }
  return {worst <= 1e-8, "max |U_explicit - U_rk4| = " + sci(worst)};
}

// AC3
Outcome liouville() {
  double worst = 0.0;
  int curves = 0;
  std::mt19937_64 rng(101);
  for (int i = 0; i < 20; ++i, ++curves) {
    const int m = 1 + i % 4;
    const MatrixCurve B = random_curve(64, m, rng, 1.0);
    worst = std::max(worst, liouville_error(B, random_diffusion(m, rng)));
  }
  std::mt19937_64 rng2(102);
  for (int i = 0; i < 10; ++i, ++curves) {
    const auto f = commuting_family(2 + i % 3, rng2);
    worst = std::max(worst, liouville_error(f.B, f.D));
  }
  // rotation-type noncommuting generators
  for (double s : {0.5, 1.0, 2.0}) {
    Mat J(2, 2), S(2, 2);
    J << 0, s, -s, 0;
    S << 1, 0, 0, -1;
    const MatrixCurve B = curve(64, 2, [&](double x) { return (J + std::cos(2 * kPi * x) * S + 0.3 * Mat::Identity(2, 2)).eval(); });
    worst = std::max(worst, liouville_error(B, DiffusionMatrix(Eigen::Vector2d(0.4, 1.1))));
    ++curves;
  }
  return {worst <= 1e-8, std::to_string(curves) + " curves, max relative error " + sci(worst)};
}

// AC4
Outcome eigenpair_residual() {
  struct Case {
    MonodromyCertificate cert;
    DiffusionMatrix D;
  };
  std::vector<Case> cases;
  {
    const DiffusionMatrix D = DiffusionMatrix::scalar(2, 0.4);
    const MatrixCurve B = curve(64, 2, [](double x) {
      Mat q(2, 2);
      const double s = std::sin(2 * kPi * x);
      q << 1 + 0.5 * std::cos(2 * kPi * x), 0.3 + 0.8 * s, 0.3 - 0.8 * s, -0.5 + std::cos(4 * kPi * x);
      return q;
    });
    cases.push_back({certify_pd(B, D), D});
  }
  {
    const DiffusionMatrix D(Eigen::Vector2d(0.5, 1.5));
    const MatrixCurve B = curve(32, 2, [](double x) {
      Mat q = Mat::Zero(2, 2);
      q(0, 0) = 1 + std::cos(2 * kPi * x);
      q(1, 1) = -0.6 + 0.4 * std::sin(2 * kPi * x);
      return q;
    });
    cases.push_back({certify_pd(B, D), D});
  }
  {
    const DiffusionMatrix D = DiffusionMatrix::scalar(2, 0.3);
    const MatrixCurve B = curve(64, 2, [](double x) {
      Mat q(2, 2);
      q << 0.4, std::sin(kPi * x), std::sin(kPi * (1 - x)), 0.4;
      return q;
    });
    cases.push_back({certify_pd(B, D), D});
  }
  const double omega = 2.0;
  const ChebyshevGrid cheb(64);
  double res_max = 0.0, bc_max = 0.0, disc_max = 0.0;
  bool exact = true, positive = true, mu_ne_1 = true;
  for (const auto& c : cases) {
    positive = positive && c.cert.positive();
    if (!c.cert.positive()) continue;
    for (int j = 0; j < c.cert.mu.size(); ++j) mu_ne_1 = mu_ne_1 && std::abs(c.cert.mu[j] - 1.0) > 1e-3;
    const auto pairs = build_H0_eigenpairs(c.cert, c.D, omega, {0, 1, 2, 5});
    const auto discrete = collocation_spectrum(c.cert.V1, c.D, omega, 64);
    const Eigen::MatrixXcd V1 = c.cert.V1.cast<std::complex<double>>();
    const Eigen::MatrixXcd Dm = c.D.matrix().cast<std::complex<double>>();
    for (const auto& e : pairs) {
      Eigen::MatrixXcd psi(cheb.size(), 2);
      for (int i = 0; i < cheb.size(); ++i) psi.row(i) = e(cheb.x(i)).transpose();
      const Eigen::MatrixXcd psi_x = cheb.diff(psi, 1), psi_xx = cheb.diff(psi, 2);
      const Eigen::MatrixXcd res = omega * psi - psi_xx * Dm.transpose() - e.lambda * psi;
      res_max = std::max(res_max, res.norm() / psi.norm());
      const double scale_x = std::max(1.0, psi_x.norm() / std::sqrt(cheb.size()));
      bc_max = std::max({bc_max, (psi.row(cheb.n()).transpose() - V1 * psi.row(0).transpose()).norm(),
                         (psi_x.row(cheb.n()).transpose() - V1 * psi_x.row(0).transpose()).norm() / scale_x});
      // lambda = omega - d (ln mu_j + 2 pi k i)^2 with d the diffusion along the eigendirection
      Eigen::Index lead = 0;
      e.direction.cwiseAbs().maxCoeff(&lead);
      const double d = c.D.is_scalar() ? c.D[0] : c.D[static_cast<int>(lead)];
      const std::complex<double> z(std::log(c.cert.mu[e.j].real()), 2.0 * kPi * e.k);
      exact = exact && (e.lambda == omega - d * z * z);
      double best = 1e300;
      for (const auto& w : discrete) best = std::min(best, std::abs(w - e.lambda));
      disc_max = std::max(disc_max, best / std::abs(e.lambda));
    }
  }
  const bool pass = positive && mu_ne_1 && res_max <= 1e-8 && bc_max <= 1e-9 && exact && disc_max <= 1e-6;
  return {pass, "residual " + sci(res_max) + ", boundary " + sci(bc_max) + ", formula " +
                    (exact ? "exact" : "MISMATCH") + ", collocation " + sci(disc_max) +
                    (positive ? "" : ", certificate not positive") + (mu_ne_1 ? "" : ", mu = 1")};
}

// AC5
Outcome gap_asymptotics() {
  const int K = 64;
  const DiffusionMatrix D = DiffusionMatrix::scalar(2, 1.0);
  std::mt19937_64 rng(105);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double beta = beta_rule(0.8, 0.5);
  double a_lo = 1e300, a_hi = 0.0, x_lo = 1e300, x_hi = 0.0;
  bool decreasing = true, enough = true;
  for (int trial = 0; trial < 5; ++trial) {
    const auto cert = exact_diagonal_certificate(Eigen::Vector2d(std::exp(u(rng)), std::exp(u(rng))));
    SpectrumReport rep = eig_lattice(cert, D, choose_omega({cert}, D), K);
    gap_check(rep, 0.8, D);
    double prev = 1e300;
    int used = 0;
    for (const Strip& s : rep.strips) {
      const int k = s.index;
      if (k < K / 2 || k > K) continue;
      ++used;
      const double ra = s.a / (4 * kPi * kPi * k * k), rx = s.xi / (4 * kPi * kPi * k);
      a_lo = std::min(a_lo, ra);
      a_hi = std::max(a_hi, ra);
      x_lo = std::min(x_lo, rx);
      x_hi = std::max(x_hi, rx);
      const double r = std::pow(s.a, beta) / s.xi;
      decreasing = decreasing && r < prev;
      prev = r;
    }
    enough = enough && used >= K / 2;
  }
  const bool pass = enough && a_lo >= 0.8 && a_hi <= 1.2 && x_lo >= 0.5 && x_hi <= 1.5 && decreasing &&
                    beta < 0.5;
  return {pass, "a_k/(4pi^2k^2) in [" + sci(a_lo) + ", " + sci(a_hi) + "], xi_k/(4pi^2k) in [" + sci(x_lo) +
                    ", " + sci(x_hi) + "], beta " + sci(beta) + (decreasing ? ", decreasing" : ", NOT decreasing") +
                    (enough ? "" : ", too few strips")};
}

// AC6
Outcome decomposition_identity() {
  const RDCSystem sys = builtin("scalar_burgers");
  const AttractorSample& s = sample_of("scalar_burgers");
  DecompositionOptions o;
  o.max_pairs = 4;
  o.cross_check = true;
  o.omegas = {1.0, 8.0, 64.0};
  const DecompositionReport coarse = probe_decomposition(sys, s, o);
  o.cross_check = false;
  o.refine_to = 256;
  const DecompositionReport fine = probe_decomposition(sys, s, o);
  const double gain = fine.max_residual > 0.0 ? coarse.max_residual / fine.max_residual : 1e300;
  const bool pass = coarse.max_residual <= 1e-6 && gain >= 3.0 &&
                    coarse.cross_checked == static_cast<int>(coarse.pairs.size()) && coarse.max_omega_spread <= 1e-10;
  return {pass, "residual N=128 " + sci(coarse.max_residual) + ", N=256 " + sci(fine.max_residual) + " (gain " +
                    sci(gain) + "), omega spread " + sci(coarse.max_omega_spread) + " over " +
                    std::to_string(coarse.cross_checked) + " pairs"};
}

// AC7
Outcome transformation_identity() {
  double worst = 0.0;
  int pairs = 0, checked = 0;
  for (const std::string name : {"diag_theorem43", "example53", "prop55"}) {
    DecompositionOptions o;
    o.max_pairs = 2;
    o.random_h = 10;
    const DecompositionReport rep = probe_decomposition(builtin(name), sample_of(name), o);
    pairs += static_cast<int>(rep.pairs.size());
    checked += rep.cross_checked;
    worst = std::max(worst, rep.max_transform_residual);
  }
  return {worst <= 1e-7 && checked == pairs && pairs > 0,
          std::to_string(checked) + "/" + std::to_string(pairs) + " pairs x 11 fields, max relative " + sci(worst)};
}

// AC8
Outcome truth_table() {
  const auto t0 = std::chrono::steady_clock::now();
  struct Row {
    std::string system;
    std::string verdict;
    std::vector<std::string> routes;
    std::vector<Stage> stages;
  };
  const std::vector<Row> rows = {
      {"diag_theorem43", "certified", {"theorem43"}, {}},
      {"prop51_symmetric", "certified", {"theorem46"}, {}},
      {"example53", "certified", {"theorem46"}, {}},
      {"prop55", "certified", {"remark42b"}, {}},
      {"counterexample_style_noncommuting", "not_certified", {}, {Stage::commuting_family, Stage::monodromy_pd}},
  };
  bool pass = true;
  std::string detail;
  for (const auto& row : rows) {
    const CertificationReport rep = certify(builtin(row.system), sample_of(row.system));
    bool ok = rep.verdict == row.verdict;
    if (!row.routes.empty()) ok = ok && std::find(row.routes.begin(), row.routes.end(), rep.route) != row.routes.end();
    if (!row.stages.empty())
      ok = ok && std::find(row.stages.begin(), row.stages.end(), rep.failing_stage) != row.stages.end();
    pass = pass && ok;
    detail += row.system + "=" + rep.verdict + (rep.route.empty() ? "" : "/" + rep.route) +
              (rep.failing_stage == Stage::none ? "" : "@" + to_string(rep.failing_stage)) + (ok ? "" : "(!)") + " ";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  pass = pass && secs < 300.0;
  return {pass, detail + sci(secs) + " s"};
}

// AC9
Outcome discriminant() {
  std::mt19937_64 rng(109);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int mismatches = 0;
  for (int i = 0; i < 100; ++i) {
    Mat Q(2, 2);
    Q << u(rng), u(rng), u(rng), u(rng);
    const double disc = std::pow(Q(0, 0) - Q(1, 1), 2) + 4.0 * Q(0, 1) * Q(1, 0);
    const bool pass = check_prop51_matrix(Q, Prop51Variant::distinct).verdict == Verdict::pass;
    mismatches += pass != (disc > 0.0);
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches in 100"};
}

// AC10
Outcome log_round_trip() {
  std::mt19937_64 rng(110);
  std::uniform_real_distribution<double> lc(0.0, 4.0);
  double worst = 0.0, tail_excess = 0.0;
  for (int i = 0; i < 50; ++i) {
    const int m = 2 + i % 3;
    const Mat V = random_spd(m, std::pow(10.0, lc(rng)), rng);
    const LogSeries ls = matrix_log_series(V);
    worst = std::max(worst, (ls.log.exp() - V).norm() / V.norm());
    Eigen::SelfAdjointEigenSolver<Mat> es(V);
    const Mat exact = es.eigenvectors() * es.eigenvalues().array().log().matrix().asDiagonal() *
                      es.eigenvectors().transpose();
    // rounding allowance for the 2^roots rescaling of the series
    tail_excess = std::max(tail_excess, (ls.log - exact).norm() - ls.tail_bound - 1e-12 * std::ldexp(1.0, ls.roots));
  }
  return {worst <= 1e-8 && tail_excess <= 0.0,
          "max relative |exp(log V) - V| " + sci(worst) + ", tail bound " + (tail_excess <= 0.0 ? "holds" : "VIOLATED")};
}

std::string file_bytes(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

bool same_tree(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(a)) files.push_back(e.path().filename());
  std::size_t count_b = 0;
  for (const auto& e : fs::directory_iterator(b)) {
    (void)e;
    ++count_b;
  }
  if (files.size() != count_b) return false;
  for (const auto& f : files)
    if (file_bytes(a / f) != file_bytes(b / f)) return false;
  return true;
}

// AC11
Outcome dissipativity_and_determinism() {
  const RDCSystem sys = builtin("scalar_burgers");
  const Grid grid(128);
  IntegratorConfig cfg;
  const DissipativityReport d1 = probe_dissipativity(sys, grid, {0.1, 1.0, 10.0}, cfg);
  const DissipativityReport d2 = probe_dissipativity(sys, grid, {0.1, 1.0, 10.0}, cfg);
  bool entered = d1.entered_ball;
  for (const auto& p : d1.probes) entered = entered && !p.failed && p.t_entry >= 0.0;

  const fs::path root = fs::temp_directory_path() / ("rdc_acceptance_" + std::to_string(getpid()));
  fs::remove_all(root);
  const AttractorSample s1 = sample_attractor(sys, grid, cfg);
  const AttractorSample s2 = sample_attractor(sys, grid, cfg);
  write_store(root / "a", s1, cfg.alpha, sys.D(), {{"seed", cfg.seed}});
  write_store(root / "b", s2, cfg.alpha, sys.D(), {{"seed", cfg.seed}});
  const bool stores = same_tree(root / "a", root / "b");
  const AttractorSample r1 = read_store(root / "a"), r2 = read_store(root / "b");

  FlOptions fo;
  fo.max_pairs = 4;
  fo.t_max = 0.5;
  DecompositionOptions dop;
  dop.max_pairs = 2;
  dop.cross_check = false;
  auto reports = [&](const AttractorSample& s) {
    Json j = {{"dissipativity", to_json(d1)},
              {"certification", to_json(certify(sys, s))},
              {"fl", to_json(probe_Fl(sys, s, fo))},
              {"grf", to_json(probe_GrF(s, 4, cfg.alpha, sys.D()))},
              {"decomposition", to_json(probe_decomposition(sys, s, dop))}};
    return j.dump();
  };
  const bool same_reports = reports(r1) == reports(r2) && to_json(d1).dump() == to_json(d2).dump();
  fs::remove_all(root);
  return {entered && stores && same_reports,
          std::string(entered ? "entered ball" : "did NOT enter ball") + " (radius " + sci(d1.absorbing_radius) +
              "), stores " + (stores ? "bit-identical" : "DIFFER") + ", reports " +
              (same_reports ? "bit-identical" : "DIFFER")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"AC1 monodromy inverse pairing", inverse_pairing},
      {"AC2 commuting fast path", commuting_fast_path},
      {"AC3 Liouville oracle", liouville},
      {"AC4 eigenpair residual", eigenpair_residual},
      {"AC5 gap asymptotics", gap_asymptotics},
      {"AC6 decomposition identity", decomposition_identity},
      {"AC7 transformation identity", transformation_identity},
      {"AC8 certifier truth table", truth_table},
      {"AC9 discriminant", discriminant},
      {"AC10 matrix-log round trip", log_round_trip},
      {"AC11 dissipativity and determinism", dissipativity_and_determinism},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome out;
    try {
      out = run();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    failures += !out.pass;
    std::cout << (out.pass ? "[PASS] " : "[FAIL] ") << name << ": " << out.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
