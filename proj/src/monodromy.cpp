#include "rdc/monodromy.hpp"

#include "rdc/errors.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>

namespace rdc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kFourPiSq = kTwoPi * kTwoPi;
constexpr double kPdTol = 1e-8;
constexpr double kStructTol = 1e-10;
constexpr double kMaxSubsteps = 4096.0;

Json matrix_json(const Mat& a) {
  Json rows = Json::array();
  for (int r = 0; r < a.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < a.cols(); ++c) row.push_back(a(r, c));
    rows.push_back(row);
  }
  return rows;
}

std::string format_sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

Json complex_json(std::complex<double> z) { return Json::array({z.real(), z.imag()}); }

std::vector<double> uniform_nodes(int n_intervals) {
  std::vector<double> xs(n_intervals + 1);
  for (int i = 0; i <= n_intervals; ++i) xs[i] = static_cast<double>(i) / n_intervals;
  return xs;
}

MatrixCurve cauchy_curve(const std::vector<Mat>& values, const std::string& kind) {
  MatrixCurve out;
  out.kind = kind;
  out.m = static_cast<int>(values.front().rows());
  out.periodic = false;
  out.values = values;
  return out;
}

// Generalised eigenvector direction for D: d with D v = d v.
double diffusion_along(const DiffusionMatrix& D, const Eigen::VectorXcd& v) {
  const Eigen::VectorXcd Dv = D.matrix().cast<std::complex<double>>() * v;
  Eigen::Index lead = 0;
  v.cwiseAbs().maxCoeff(&lead);
  const double d = D[static_cast<int>(lead)];
  if ((Dv - d * v).norm() > 1e-8 * v.norm())
    throw RouteMismatch("eigenvector is not an eigenvector of D; nonscalar D needs a diagonal certificate");
  return d;
}

struct PdSpectrum {
  bool diagonal = false;
  Eigen::VectorXd mu;
  Mat phi;
};

// Diagonal up to entries small against the geometric mean of the matching
// diagonal pair.
bool near_diagonal(const Mat& a, double tol) {
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (i != j && std::abs(a(i, j)) > tol * std::sqrt(std::abs(a(i, i) * a(j, j)))) return false;
  return true;
}

// Positive spectrum of a (symmetric or diagonal) V with its independently
// computed inverse W. An eigenvalue of V below kPdTol ||V|| is not resolved
// by V itself and is taken as the reciprocal of the matching eigenvalue of W.
std::optional<PdSpectrum> pd_spectrum(const Mat& V, const Mat& W) {
  const int m = static_cast<int>(V.rows());
  const double nv = V.norm(), nw = W.norm();
  PdSpectrum out;
  out.mu.resize(m);
  if (near_diagonal(V, kPdTol) && near_diagonal(W, kPdTol)) {
    out.diagonal = true;
    out.phi = identity(m);
    for (int j = 0; j < m; ++j) {
      if (V(j, j) >= kPdTol * nv) out.mu[j] = V(j, j);
      else if (W(j, j) >= kPdTol * nw && V(j, j) > 0.0) out.mu[j] = 1.0 / W(j, j);
      else return std::nullopt;
    }
    return out;
  }
  if (asymmetry(V) > kPdTol * nv || asymmetry(W) > kPdTol * nw) return std::nullopt;
  Eigen::SelfAdjointEigenSolver<Mat> ev(0.5 * (V + V.transpose()));
  Eigen::SelfAdjointEigenSolver<Mat> ew(0.5 * (W + W.transpose()), Eigen::EigenvaluesOnly);
  for (int j = 0; j < m; ++j) {
    const double v = ev.eigenvalues()[j], w = ew.eigenvalues()[m - 1 - j];
    if (v >= kPdTol * nv) out.mu[j] = v;
    else if (w >= kPdTol * nw && v > 0.0) out.mu[j] = 1.0 / w;
    else return std::nullopt;
  }
  out.phi = ev.eigenvectors();
  return out;
}

}  // namespace

FundamentalSolution::FundamentalSolution(const MatrixCurve& B, const DiffusionMatrix& D,
                                         CauchyOptions opts)
    : B_(B), Dinv_(D.inverse()), n_intervals_(B.n_nodes()), opts_(opts) {
  if (D.m() != B.m) throw SizeMismatch("generator and diffusion matrix sizes differ");
  if (opts_.substeps < 1) throw PreconditionError("substeps must be positive");
  // RK4 error on y' = L y over [0,1] is about L (hL)^4 / 120
  double L = 0.0;
  for (const Mat& b : B.values) L = std::max(L, 0.5 * (Dinv_ * b).norm());
  const double hL = std::min(0.05, std::pow(12.0 * opts_.tolerance / std::max(L, 1.0), 0.25));
  const double wanted = std::min(std::ceil(L / (n_intervals_ * hL)), kMaxSubsteps);
  initial_substeps_ = std::max(opts_.substeps, static_cast<int>(wanted));
}

std::vector<Mat> FundamentalSolution::run(const std::vector<double>& xs, bool left,
                                          int substeps, double x0) const {
  const int m = B_.m();
  const double h_max = 1.0 / (static_cast<double>(n_intervals_) * substeps);
  auto F = [&](double x) { return (0.5 * (left ? -1.0 : 1.0)) * generator(x); };
  auto apply = [left](const Mat& f, const Mat& y) -> Mat { return left ? Mat(f * y) : Mat(y * f); };
  std::vector<Mat> out;
  out.reserve(xs.size());
  Mat Y = identity(m);
  double x = x0;
  for (double target : xs) {
    if (target < x - 1e-15 || target > 1.0 + 1e-15)
      throw PreconditionError("Cauchy output points must be sorted in [0,1]");
    const double span = target - x;
    const long n = span > 0.0 ? std::max(1L, static_cast<long>(std::ceil(span / h_max - 1e-9))) : 0;
    const double h = n > 0 ? span / n : 0.0;
    for (long s = 0; s < n; ++s) {
      const double x0 = x + s * h;
      const Mat f0 = F(x0), fm = F(x0 + 0.5 * h), f1 = F(x0 + h);
      const Mat k1 = apply(f0, Y);
      const Mat k2 = apply(fm, Y + 0.5 * h * k1);
      const Mat k3 = apply(fm, Y + 0.5 * h * k2);
      const Mat k4 = apply(f1, Y + h * k3);
      Y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    x = target;
    out.push_back(Y);
  }
  return out;
}

std::vector<Mat> FundamentalSolution::solve(const std::vector<double>& xs, bool left,
                                            double x0) const {
  int s = initial_substeps_;
  std::vector<Mat> coarse = run(xs, left, s, x0);
  for (int level = 0;; ++level) {
    std::vector<Mat> fine = run(xs, left, 2 * s, x0);
    double diff = 0.0, size = 1.0;
    for (size_t i = 0; i < xs.size(); ++i) {
      diff = std::max(diff, (fine[i] - coarse[i]).cwiseAbs().maxCoeff());
      size = std::max(size, fine[i].cwiseAbs().maxCoeff());
    }
    error_ = diff / 15.0 / size;
    substeps_ = 2 * s;
    if (error_ <= opts_.tolerance) return fine;
    if (level >= opts_.max_refinements)
      throw StepSizeFailure("Cauchy solve error estimate " + format_sci(error_) +
                            " above tolerance after refinement");
    s *= 2;
    coarse = std::move(fine);
  }
}

std::vector<Mat> FundamentalSolution::U_at(const std::vector<double>& xs, double x0) const {
  return solve(xs, true, x0);
}
std::vector<Mat> FundamentalSolution::V_at(const std::vector<double>& xs, double x0) const {
  return solve(xs, false, x0);
}

MatrixCurve solve_U(const MatrixCurve& B, const DiffusionMatrix& D, CauchyOptions opts,
                    double* error_estimate) {
  FundamentalSolution sol(B, D, opts);
  MatrixCurve out = cauchy_curve(sol.U_at(uniform_nodes(B.n_nodes())), "U");
  if (error_estimate) *error_estimate = sol.error_estimate();
  return out;
}

MatrixCurve solve_V(const MatrixCurve& B, const DiffusionMatrix& D, CauchyOptions opts,
                    double* error_estimate) {
  FundamentalSolution sol(B, D, opts);
  MatrixCurve out = cauchy_curve(sol.V_at(uniform_nodes(B.n_nodes())), "V");
  if (error_estimate) *error_estimate = sol.error_estimate();
  return out;
}

double relative_commutator(const MatrixCurve& W) {
  double scale = 0.0;
  for (const Mat& a : W.values) scale = std::max(scale, a.norm());
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  for (int i = 0; i < W.n_nodes(); ++i)
    for (int j = i + 1; j < W.n_nodes(); ++j)
      worst = std::max(worst, commutator(W.values[i], W.values[j]).norm());
  return worst / (scale * scale);
}

MatrixCurve conjugate_generator(const MatrixCurve& B, const DiffusionMatrix& D, const Mat& C) {
  const Mat Cinv = C.inverse();
  const Mat Dinv = D.inverse();
  MatrixCurve W = B;
  W.kind = "W";
  for (Mat& a : W.values) a = Cinv * Dinv * a * C;
  return W;
}

MatrixCurve explicit_U_commuting(const MatrixCurve& W, const Mat& C, double tol) {
  if (!W.periodic) throw PreconditionError("generator must be a periodic curve");
  const double comm = relative_commutator(W);
  if (comm > tol)
    throw PreconditionError("generator values do not commute (relative commutator " +
                            std::to_string(comm) + ")");
  const int N = W.n_nodes();
  const int m = W.m;
  std::vector<Mat> integral(N + 1, Mat::Zero(m, m));
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) {
      Eigen::VectorXd series(N);
      for (int i = 0; i < N; ++i) series[i] = W.values[i](r, c);
      Eigen::VectorXcd spec = forward_real(series);
      const double mean = spec[0].real();
      spec[0] = 0.0;
      spec[N / 2] = 0.0;
      for (int k = 1; k < N / 2; ++k) spec[k] /= std::complex<double>(0.0, kTwoPi * k);
      const Eigen::VectorXd p = inverse_real(spec, N);
      for (int i = 0; i < N; ++i) integral[i](r, c) = mean * i / N + p[i] - p[0];
      integral[N](r, c) = mean;
    }
  }
  const Mat Cinv = C.inverse();
  std::vector<Mat> values;
  values.reserve(N + 1);
  for (const Mat& I : integral) values.push_back(C * expm(-0.5 * I) * Cinv);
  return cauchy_curve(values, "U");
}

LogSeries matrix_log_series(const Mat& V, double b, int max_terms) {
  const int m = static_cast<int>(V.rows());
  if (V.cols() != m) throw SizeMismatch("matrix logarithm needs a square matrix");
  const bool auto_b = !(b > 0.0);
  Mat X = V;
  LogSeries out;
  double kappa = 1.0;
  for (;;) {
    Eigen::EigenSolver<Mat> es(X);
    const Eigen::VectorXcd ev = es.eigenvalues();
    const double top = ev.cwiseAbs().maxCoeff();
    double c1 = std::numeric_limits<double>::infinity(), c2 = 0.0;
    for (int j = 0; j < m; ++j) {
      if (std::abs(ev[j].imag()) > 1e-10 * top || !(ev[j].real() > 0.0))
        throw DomainFault("logarithm series needs a real positive spectrum");
      c1 = std::min(c1, ev[j].real());
      c2 = std::max(c2, ev[j].real());
    }
    const double bb = auto_b || out.roots > 0 ? 2.0 * c2 : b;
    if (!(c2 < bb)) throw DomainFault("spectrum of V/b - E must lie in (-1, 0)");
    const Mat vecs = es.eigenvectors().real();
    Eigen::JacobiSVD<Mat> svd(vecs);
    kappa = svd.singularValues()(0) / svd.singularValues()(m - 1);
    out.b = bb;
    out.delta = 1.0 - c1 / bb;
    // terms needed for kappa delta^n / n < 1e-14
    int needed = 1;
    while (needed <= max_terms && kappa * std::pow(out.delta, needed) / needed >= 1e-14) ++needed;
    if (needed <= max_terms || !auto_b || out.roots >= 60) break;
    X = Mat(X.sqrt());
    ++out.roots;
  }
  const Mat E = identity(m);
  const Mat Y = X / out.b - E;
  Mat term = Y;
  Mat sum = Mat::Zero(m, m);
  int n = 1;
  for (; n <= max_terms; ++n) {
    sum += ((n % 2) ? 1.0 : -1.0) / n * term;
    if (term.norm() / n < 1e-14) break;
    term = term * Y;
  }
  out.terms = std::min(n, max_terms);
  const double scale = std::ldexp(1.0, out.roots);
  out.log = scale * (std::log(out.b) * E + sum);
  out.tail_bound = scale * kappa * std::pow(out.delta, out.terms + 1) /
                   ((out.terms + 1) * (1.0 - out.delta));
  return out;
}

Mat fractional_power(const Mat& V, double x) {
  if (x == 0.0) return identity(static_cast<int>(V.rows()));
  return expm(-x * matrix_log_series(V).log);
}

std::string to_string(PdVerdict v) {
  switch (v) {
    case PdVerdict::positive_definite: return "positive_definite";
    case PdVerdict::similar_positive_definite: return "similar_positive_definite";
    case PdVerdict::diagonal_positive_definite: return "diagonal_positive_definite";
    case PdVerdict::failed: return "failed";
  }
  return "failed";
}

std::string to_string(PdRoute r) {
  switch (r) {
    case PdRoute::none: return "none";
    case PdRoute::remark42a: return "remark42a";
    case PdRoute::remark42b: return "remark42b";
    case PdRoute::similarity_445: return "similarity_445";
    case PdRoute::direct_symmetric_eig: return "direct_symmetric_eig";
  }
  return "none";
}

MonodromyCertificate certify_pd(const MatrixCurve& B, const DiffusionMatrix& D,
                                const std::optional<Mat>& C_hint, CauchyOptions opts) {
  if (!B.periodic) throw PreconditionError("generator must be a periodic curve");
  const int m = B.m;
  const int N = B.n_nodes();
  const Mat Dinv = D.inverse();
  MatrixCurve M = B;
  double scale = 0.0;
  for (Mat& a : M.values) {
    a = Dinv * a;
    scale = std::max(scale, a.norm());
  }
  const double floor = std::max(scale, 1e-12);

  MonodromyCertificate cert;
  double sym = 0.0, refl = 0.0;
  for (int i = 0; i < N; ++i) {
    sym = std::max(sym, asymmetry(M.values[i]));
    refl = std::max(refl, (M.values[i].transpose() - M.values[(N - i) % N]).norm());
  }
  cert.remark42a_holds = sym <= kStructTol * floor && relative_commutator(M) <= kStructTol;
  cert.remark42b_holds = refl <= kStructTol * floor;

  FundamentalSolution sol(B, D, opts);
  const std::vector<double> xs = uniform_nodes(N);
  const std::vector<Mat> U = sol.U_at(xs);
  double err = sol.error_estimate();
  const std::vector<Mat> V = sol.V_at(xs);
  err = std::max(err, sol.error_estimate());
  cert.ode_error = err;
  cert.U1 = U.back();
  cert.V1 = V.back();
  for (size_t i = 0; i < xs.size(); ++i)
    cert.pairing_error = std::max(cert.pairing_error, (U[i] * V[i] - identity(m)).norm());

  const Mat E = identity(m);
  std::optional<PdSpectrum> spec;
  Mat C = E;
  if (cert.remark42a_holds && (spec = pd_spectrum(cert.V1, cert.U1))) {
    cert.route = PdRoute::remark42a;
  } else if (cert.remark42b_holds && (spec = pd_spectrum(cert.V1, cert.U1))) {
    cert.route = PdRoute::remark42b;
  } else if (C_hint) {
    const Mat Cinv = C_hint->inverse();
    if ((spec = pd_spectrum(Cinv * cert.V1 * *C_hint, Cinv * cert.U1 * *C_hint))) {
      cert.route = PdRoute::similarity_445;
      C = *C_hint;
    }
  }
  if (cert.route == PdRoute::none && (spec = pd_spectrum(cert.V1, cert.U1)))
    cert.route = PdRoute::direct_symmetric_eig;

  cert.C = C;
  cert.V_script = C.inverse() * cert.V1 * C;
  if (cert.route == PdRoute::none) {
    cert.verdict = PdVerdict::failed;
    cert.mu = Eigen::EigenSolver<Mat>(cert.V1).eigenvalues();
    cert.note = "no positive-definiteness route applies";
    return cert;
  }

  const Mat& Vs = cert.V_script;
  cert.mu = spec->mu.cast<std::complex<double>>();
  cert.phi = spec->phi;
  if (spec->diagonal) cert.verdict = PdVerdict::diagonal_positive_definite;
  else if (cert.route == PdRoute::similarity_445) cert.verdict = PdVerdict::similar_positive_definite;
  else cert.verdict = PdVerdict::positive_definite;
  cert.c1 = cert.mu.real().minCoeff();
  cert.c2 = cert.mu.real().maxCoeff();
  const LogSeries ls = matrix_log_series(Vs);
  cert.logV = ls.log;
  cert.b = ls.b;
  cert.delta = ls.delta;
  cert.log_terms = ls.terms;
  cert.log_roots = ls.roots;
  cert.log_tail_bound = ls.tail_bound;
  cert.note = "b = 2 c2 from the sampled spectrum; the flow-derivative bound c3 is not estimated";
  return cert;
}

Json to_json(const MonodromyCertificate& cert) {
  Json j;
  j["verdict"] = to_string(cert.verdict);
  j["route"] = to_string(cert.route);
  j["remark42a_holds"] = cert.remark42a_holds;
  j["remark42b_holds"] = cert.remark42b_holds;
  j["U1"] = matrix_json(cert.U1);
  j["V1"] = matrix_json(cert.V1);
  j["C"] = matrix_json(cert.C);
  j["V_script"] = matrix_json(cert.V_script);
  Json mu = Json::array();
  for (int i = 0; i < cert.mu.size(); ++i) mu.push_back(complex_json(cert.mu[i]));
  j["mu"] = mu;
  j["pairing_error"] = cert.pairing_error;
  j["ode_error"] = cert.ode_error;
  if (cert.positive()) {
    j["phi"] = matrix_json(cert.phi);
    j["logV"] = matrix_json(cert.logV);
    j["b"] = cert.b;
    j["delta"] = cert.delta;
    j["c1"] = cert.c1;
    j["c2"] = cert.c2;
    j["log_terms"] = cert.log_terms;
    j["log_roots"] = cert.log_roots;
    j["log_tail_bound"] = cert.log_tail_bound;
  }
  j["note"] = cert.note;
  return j;
}

std::string to_string(GapVerdict v) {
  switch (v) {
    case GapVerdict::consistent: return "asymptotics consistent";
    case GapVerdict::not_consistent: return "asymptotics not consistent";
    case GapVerdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

double beta_rule(double alpha, double theta) {
  return theta <= 0.5 * alpha ? 0.5 * alpha : (alpha + theta) / 3.0;
}

namespace {

void append_lattice(SpectrumReport& rep, const MonodromyCertificate& cert, const DiffusionMatrix& D,
                    int pair) {
  if (!cert.positive()) throw PreconditionError("eigenvalue lattice needs a positive certificate");
  if (!D.is_scalar() && cert.verdict != PdVerdict::diagonal_positive_definite)
    throw RouteMismatch("nonscalar D needs a diagonal positive-definite certificate");
  const int m = static_cast<int>(cert.mu.size());
  for (int j = 0; j < m; ++j) {
    const Eigen::VectorXcd v = cert.C.cast<std::complex<double>>() * cert.phi.col(j).cast<std::complex<double>>();
    const double d = diffusion_along(D, v);
    const double L = std::log(cert.mu[j].real());
    rep.c = std::max(rep.c, 2.0 * std::sqrt(d) * std::abs(L));
    for (int k = -rep.K; k <= rep.K; ++k) {
      const std::complex<double> z(L, kTwoPi * k);
      rep.lambda.push_back(LatticePoint{pair, k, j, d, rep.omega - d * z * z});
    }
  }
}

void finish_sector(SpectrumReport& rep) {
  rep.in_sector = true;
  for (const auto& p : rep.lambda) {
    const double re = p.lambda.real();
    const double bound = re > 0.0 ? rep.c * std::sqrt(re) : -1.0;
    if (!(std::abs(p.lambda.imag()) <= bound * (1.0 + 1e-12) + 1e-12)) {
      rep.in_sector = false;
      break;
    }
  }
}

}  // namespace

SpectrumReport eig_lattice(const MonodromyCertificate& cert, const DiffusionMatrix& D, double omega,
                           int K) {
  return eig_lattice(std::vector<MonodromyCertificate>{cert}, D, omega, K);
}

SpectrumReport eig_lattice(const std::vector<MonodromyCertificate>& certs, const DiffusionMatrix& D,
                           double omega, int K) {
  if (K < 0) throw PreconditionError("K must be nonnegative");
  SpectrumReport rep;
  rep.omega = omega;
  rep.K = K;
  for (size_t i = 0; i < certs.size(); ++i) append_lattice(rep, certs[i], D, static_cast<int>(i));
  finish_sector(rep);
  return rep;
}

double choose_omega(const std::vector<MonodromyCertificate>& certs, const DiffusionMatrix& D, int K) {
  for (double omega = 1.0;; omega *= 2.0) {
    const SpectrumReport rep = eig_lattice(certs, D, omega, K);
    double min_re = std::numeric_limits<double>::infinity();
    for (const auto& p : rep.lambda) min_re = std::min(min_re, p.lambda.real());
    if (min_re >= 1.0 && rep.in_sector) return omega;
    if (omega > 1e300) throw DomainFault("no omega found");
  }
}

void gap_check(SpectrumReport& rep, double alpha, const DiffusionMatrix& D) {
  rep.beta = beta_rule(alpha, rep.theta);
  rep.strips.clear();
  rep.ratios.clear();
  rep.gap = GapVerdict::inconclusive;
  rep.gap_ok = false;
  // clusters share the base value 4 pi^2 k^2 d_j; only bases covered for every j are used
  const double limit = kFourPiSq * rep.K * rep.K * D.values().minCoeff();
  std::map<double, std::pair<double, double>> clusters;
  for (const auto& p : rep.lambda) {
    const double base = kFourPiSq * p.k * p.k * p.d;
    if (base > limit * (1.0 + 1e-12)) continue;
    auto [it, fresh] = clusters.try_emplace(base, p.lambda.real(), p.lambda.real());
    if (!fresh) {
      it->second.first = std::min(it->second.first, p.lambda.real());
      it->second.second = std::max(it->second.second, p.lambda.real());
    }
  }
  std::vector<std::pair<double, double>> merged;
  for (const auto& [base, iv] : clusters) {
    (void)base;
    merged.push_back(iv);
  }
  std::sort(merged.begin(), merged.end());
  std::vector<std::pair<double, double>> hull;
  for (const auto& iv : merged) {
    if (!hull.empty() && iv.first <= hull.back().second)
      hull.back().second = std::max(hull.back().second, iv.second);
    else
      hull.push_back(iv);
  }
  for (size_t s = 1; s < hull.size(); ++s) {
    const double lo = hull[s - 1].second, hi = hull[s].first;
    rep.strips.push_back(Strip{static_cast<int>(s), 0.5 * (lo + hi), 0.5 * (hi - lo)});
  }
  const int n = static_cast<int>(rep.strips.size());
  if (n < 3) return;
  const int first = (n + 1) / 2;
  bool ok = true;
  for (int s = first; s <= n; ++s) {
    const Strip& st = rep.strips[s - 1];
    if (!(st.a > 0.0) || !(st.xi > 0.0)) {
      ok = false;
      rep.ratios.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    rep.ratios.push_back(std::pow(st.a, rep.beta) / st.xi);
  }
  if (ok) {
    const double r0 = rep.ratios.front();
    for (size_t i = 0; i < rep.ratios.size(); ++i) {
      if (i > 0 && !(rep.ratios[i] < rep.ratios[i - 1])) ok = false;
      const double predicted = std::pow(static_cast<double>(first + i) / first, 2.0 * rep.beta - 1.0);
      const double q = (rep.ratios[i] / r0) / predicted;
      if (!(q >= 0.5 && q <= 2.0)) ok = false;
    }
  }
  rep.gap = ok ? GapVerdict::consistent : GapVerdict::not_consistent;
  rep.gap_ok = ok;
}

Json to_json(const SpectrumReport& rep) {
  Json j;
  j["omega"] = rep.omega;
  j["K"] = rep.K;
  j["sector"] = {{"c", rep.c}, {"theta", rep.theta}, {"contains_lattice", rep.in_sector}};
  j["beta"] = rep.beta;
  j["gap_verdict"] = to_string(rep.gap);
  j["gap_ok"] = rep.gap_ok;
  Json strips = Json::array();
  for (const auto& s : rep.strips) strips.push_back({{"k", s.index}, {"a", s.a}, {"xi", s.xi}});
  j["strips"] = strips;
  j["ratios"] = rep.ratios;
  j["lattice_size"] = rep.lambda.size();
  Json lattice = Json::array();
  for (const auto& p : rep.lambda) lattice.push_back({p.pair, p.k, p.j, p.lambda.real(), p.lambda.imag()});
  j["lattice"] = lattice;
  return j;
}

std::vector<H0Eigenpair> build_H0_eigenpairs(const MonodromyCertificate& cert,
                                             const DiffusionMatrix& D, double omega,
                                             const std::vector<int>& k_list) {
  if (!cert.positive()) throw PreconditionError("eigenpairs need a positive certificate");
  std::vector<H0Eigenpair> out;
  const int m = static_cast<int>(cert.mu.size());
  for (int k : k_list) {
    for (int j = 0; j < m; ++j) {
      H0Eigenpair e;
      e.k = k;
      e.j = j;
      e.direction = cert.C.cast<std::complex<double>>() * cert.phi.col(j).cast<std::complex<double>>();
      const double d = diffusion_along(D, e.direction);
      e.exponent = std::complex<double>(std::log(cert.mu[j].real()), kTwoPi * k);
      e.lambda = omega - d * e.exponent * e.exponent;
      out.push_back(e);
    }
  }
  return out;
}

std::vector<std::complex<double>> collocation_spectrum(const Mat& V1, const DiffusionMatrix& D,
                                                       double omega, int n) {
  const ChebyshevGrid cheb(n);
  const int m = D.m();
  const int p = n + 1;
  const Eigen::MatrixXd D1 = cheb.d1().cast<double>();
  const Eigen::MatrixXd D2 = cheb.d2().cast<double>();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m * p, m * p);
  Eigen::MatrixXd Bm = Eigen::MatrixXd::Zero(m * p, m * p);
  for (int c = 0; c < m; ++c) {
    for (int i = 1; i < n; ++i) {
      const int row = c * p + i;
      A.block(row, c * p, 1, p) = -D[c] * D2.row(i);
      A(row, row) += omega;
      Bm(row, row) = 1.0;
    }
    // eta_c(1) - sum_l V1(c,l) eta_l(0) = 0 and the same for eta_x
    const int r0 = c * p, r1 = c * p + n;
    A(r0, c * p + n) = 1.0;
    A.block(r1, c * p, 1, p) = D1.row(n);
    for (int l = 0; l < m; ++l) {
      A(r0, l * p) -= V1(c, l);
      A.block(r1, l * p, 1, p) -= V1(c, l) * D1.row(0);
    }
  }
  Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> ges(A, Bm, false);
  std::vector<std::complex<double>> out;
  const Eigen::VectorXcd alphas = ges.alphas();
  const Eigen::VectorXd betas = ges.betas();
  for (int i = 0; i < alphas.size(); ++i)
    if (std::abs(betas[i]) > 1e-10 * std::abs(alphas[i])) out.push_back(alphas[i] / betas[i]);
  return out;
}

}  // namespace rdc
