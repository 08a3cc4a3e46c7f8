#include "rdc/dynamics_probe.hpp"

#include "rdc/chebyshev.hpp"
#include "rdc/errors.hpp"
#include "rdc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace rdc {

namespace {

constexpr int kHistogramBins = 50;

std::vector<std::pair<int, int>> distinct_pairs(const AttractorSample& sample) {
  std::vector<std::pair<int, int>> out;
  const int n = static_cast<int>(sample.snapshots.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) out.emplace_back(i, j);
  return out;
}

// Evenly spaced subset of at most k entries.
template <class T>
std::vector<T> spread_subset(const std::vector<T>& v, int k) {
  if (static_cast<int>(v.size()) <= k) return v;
  std::vector<T> out;
  for (int i = 0; i < k; ++i) out.push_back(v[static_cast<std::size_t>(i) * v.size() / k]);
  return out;
}

double l2(const SpectralField& u, const DiffusionMatrix& D) { return sobolev_norm(u, 0.0, D); }

SpectralField regrid(const SpectralField& u, int n) {
  if (n <= 0 || n == u.grid().size()) return u;
  const auto [num, den] = u.grid().dealias_fraction();
  return to_spectral(Grid(n, num, den), to_nodal_on(u, n));
}

// Highest wavenumber with a coefficient above 1e-12 of the largest one.
int significant_bandwidth(const SpectralField& u) {
  const double top = u.coeffs().cwiseAbs().maxCoeff();
  int k_max = 0;
  for (int k = 1; k < u.coeffs().cols(); ++k)
    if (u.coeffs().col(k).cwiseAbs().maxCoeff() > 1e-12 * top) k_max = k;
  return k_max;
}

}  // namespace

void fit_envelope(FlReport& rep) {
  std::vector<double> t, y;
  for (const auto& s : rep.series) {
    t.insert(t.end(), s.t.begin(), s.t.end());
    y.insert(y.end(), s.log_ratio.begin(), s.log_ratio.end());
  }
  rep.inconclusive = t.empty();
  if (t.empty()) return;
  auto logM = [&](double kappa) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < t.size(); ++i) best = std::max(best, y[i] - kappa * t[i]);
    return best;
  };
  // sum of squared gaps is convex in kappa: each gap is convex and nonnegative
  auto cost = [&](double kappa) {
    const double c = logM(kappa);
    double acc = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) acc += std::pow(c + kappa * t[i] - y[i], 2);
    return acc;
  };
  double hi = 1.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] > 0.0) hi = std::max(hi, 2.0 * std::abs(y[i]) / t[i] + 1.0);
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (cost(m1) <= cost(m2)) hi = m2;
    else lo = m1;
  }
  rep.kappa_est = 0.5 * (lo + hi);
  if (cost(0.0) <= cost(rep.kappa_est)) rep.kappa_est = 0.0;
  const double c = logM(rep.kappa_est);
  rep.M_est = std::exp(c);
  rep.fit_residual = std::sqrt(cost(rep.kappa_est) / static_cast<double>(t.size()));
}

FlReport probe_Fl(const RDCSystem& sys, const AttractorSample& sample, const FlOptions& opts) {
  FlReport rep;
  std::vector<std::pair<int, int>> usable;
  for (const auto& [a, b] : distinct_pairs(sample)) {
    const double d0 = sobolev_norm(sample.snapshots[a] - sample.snapshots[b], opts.alpha, sys.D());
    if (d0 >= opts.floor) usable.emplace_back(a, b);
    else ++rep.pairs_excluded;
  }
  usable = spread_subset(usable, opts.max_pairs);
  rep.series.resize(usable.size());
  parallel_for(usable.size(), [&](std::size_t p) {
    const auto [a, b] = usable[p];
    const FlowPairHistory h = flow_pair(sys, sample.snapshots[a], sample.snapshots[b], opts.t_max,
                                        opts.dt, opts.scheme, opts.record_every);
    FlSeries s;
    s.a = a;
    s.b = b;
    s.d0 = sobolev_norm(h.u.front() - h.v.front(), opts.alpha, sys.D());
    for (std::size_t i = 0; i < h.times.size(); ++i) {
      s.t.push_back(h.times[i]);
      s.log_ratio.push_back(std::log(sobolev_norm(h.u[i] - h.v[i], opts.alpha, sys.D()) / s.d0));
    }
    rep.series[p] = std::move(s);
  });
  rep.pairs_used = static_cast<int>(rep.series.size());
  fit_envelope(rep);
  return rep;
}

GrFReport probe_GrF(const AttractorSample& sample, int n_keep, double alpha, const DiffusionMatrix& D,
                    double floor) {
  GrFReport rep;
  rep.n_keep = n_keep;
  rep.histogram.assign(kHistogramBins, 0);
  const auto pairs = distinct_pairs(sample);
  std::vector<double> ratio(pairs.size(), -1.0);
  parallel_for(pairs.size(), [&](std::size_t p) {
    const SpectralField w = sample.snapshots[pairs[p].first] - sample.snapshots[pairs[p].second];
    const double full = sobolev_norm(w, alpha, D);
    if (full < floor) return;
    ratio[p] = std::min(1.0, sobolev_norm(project_low_modes(w, n_keep), alpha, D) / full);
  });
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    if (ratio[p] < 0.0) continue;
    ++rep.pairs;
    rep.histogram[std::min(kHistogramBins - 1, static_cast<int>(ratio[p] * kHistogramBins))]++;
    if (ratio[p] < rep.min_ratio || rep.arg_a < 0) {
      rep.min_ratio = ratio[p];
      rep.arg_a = pairs[p].first;
      rep.arg_b = pairs[p].second;
    }
  }
  rep.inconclusive = rep.pairs == 0;
  return rep;
}

std::vector<GrFReport> sweep_GrF(const AttractorSample& sample, double alpha, const DiffusionMatrix& D,
                                 double floor) {
  std::vector<GrFReport> out;
  if (sample.snapshots.empty()) return out;
  const int top = sample.snapshots.front().grid().size() / 4;
  for (int n = 1; n <= top; ++n) out.push_back(probe_GrF(sample, n, alpha, D, floor));
  return out;
}

int default_panels(const Linearization& lin, const DiffusionMatrix& D, const SpectralField& h) {
  double L = 0.0;
  const Mat Dinv = D.inverse();
  for (const Mat& b : lin.B.values) L = std::max(L, 0.5 * (Dinv * b).norm());
  const int m = lin.B.m;
  NodalArray nodal(m * m, lin.B.n_nodes());
  for (int i = 0; i < lin.B.n_nodes(); ++i)
    nodal.col(i) = Eigen::Map<const Eigen::VectorXd>(lin.B.values[i].data(), m * m);
  const SpectralField B = to_spectral(Grid(lin.B.n_nodes()), nodal);
  const int k_max = std::max(significant_bandwidth(h), significant_bandwidth(B));
  return std::max(1, static_cast<int>(std::ceil(1.5 * std::max(L, static_cast<double>(k_max)))));
}

PanelValues assemble_T0_minus_T(const Linearization& lin, const DiffusionMatrix& D,
                                const SpectralField& h, double omega, int n_panels, int n_cheb,
                                const CauchyOptions& cauchy) {
  const int m = h.m();
  const ChebyshevGrid cheb(n_cheb);
  const FundamentalSolution fs(lin.B, D, cauchy);
  const CurveInterpolant Q(lin.Q);
  const Mat Dm = D.matrix();
  const double w = 1.0 / n_panels;
  PanelValues out;
  out.values.resize(static_cast<Eigen::Index>(n_panels) * cheb.size(), m);
  for (int p = 0; p < n_panels; ++p) {
    const double a = p * w;
    std::vector<double> xs(cheb.size());
    for (int i = 0; i < cheb.size(); ++i) xs[i] = std::min(1.0, a + w * cheb.x(i));
    const std::vector<Mat> U = fs.U_at(xs, a);
    const std::vector<Mat> V = fs.V_at(xs, a);
    Eigen::MatrixXd hv(cheb.size(), m), eta(cheb.size(), m);
    for (int i = 0; i < cheb.size(); ++i) {
      for (int j = 0; j < m; ++j) hv(i, j) = evaluate_at(h, j, xs[i]);
      eta.row(i) = (V[i] * hv.row(i).transpose()).transpose();
    }
    const Eigen::MatrixXd eta_xx = cheb.diff(eta, 2) / (w * w);
    for (int i = 0; i < cheb.size(); ++i) {
      const Vec hi = hv.row(i).transpose();
      const Vec T0h = omega * hi + Q(xs[i]) * hi;
      const Vec Th = omega * hi - Dm * U[i] * Vec(eta_xx.row(i).transpose());
      out.values.row(static_cast<Eigen::Index>(p) * cheb.size() + i) = (T0h - Th).transpose();
      out.x.push_back(xs[i]);
    }
  }
  return out;
}

double transformation_residual(const Linearization& lin, const DiffusionMatrix& D,
                               const SpectralField& h, double omega, int n_cheb,
                               const CauchyOptions& cauchy) {
  const PanelValues T = assemble_T0_minus_T(lin, D, h, omega, default_panels(lin, D, h), n_cheb, cauchy);
  const SpectralField Rh = apply_R(D, lin.B0, lin.B, h);
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < T.x.size(); ++i) {
    for (int j = 0; j < h.m(); ++j) {
      const double r = evaluate_at(Rh, j, T.x[i]);
      diff = std::max(diff, std::abs(T.values(static_cast<Eigen::Index>(i), j) - r));
      scale = std::max(scale, std::abs(r));
    }
  }
  return scale > 0.0 ? diff / scale : diff;
}

DecompositionReport probe_decomposition(const RDCSystem& sys, const AttractorSample& sample,
                                        const DecompositionOptions& opts) {
  DecompositionReport rep;
  auto pairs = spread_subset(distinct_pairs(sample), opts.max_pairs);
  if (pairs.empty() && !sample.snapshots.empty()) pairs.emplace_back(0, 0);
  rep.pairs.resize(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t p) {
    const auto [a, b] = pairs[p];
    const SpectralField u = regrid(sample.snapshots[a], opts.refine_to);
    const SpectralField v = regrid(sample.snapshots[b], opts.refine_to);
    const Linearization lin = linearize(sys, u, v, opts.n_quad);
    const SpectralField h = u - v;
    const SpectralField dG = eval_G(sys, u) - eval_G(sys, v);
    DecompositionPair out;
    out.a = a;
    out.b = b;
    out.dG_norm = l2(dG, sys.D());
    const double res = l2(dG - apply_R(sys.D(), lin.B0, lin.B, h), sys.D());
    out.residual = out.dG_norm > 0.0 ? res / out.dG_norm : res;

    if (opts.cross_check && a != b && certify_pd(lin.B, sys.D(), std::nullopt, opts.cauchy).positive()) {
      std::vector<SpectralField> hs = {h};
      std::mt19937_64 rng(opts.seed + 1000003ULL * p);
      for (int r = 0; r < opts.random_h; ++r) hs.push_back(random_field(u.grid(), sys.m(), rng, 4.0, 16));
      for (const SpectralField& hh : hs) {
        const int panels = default_panels(lin, sys.D(), hh);
        out.transform_residual = std::max(
            out.transform_residual,
            transformation_residual(lin, sys.D(), hh, opts.omegas.front(), opts.n_cheb, opts.cauchy));
        const PanelValues first =
            assemble_T0_minus_T(lin, sys.D(), hh, opts.omegas.front(), panels, opts.n_cheb, opts.cauchy);
        const double scale = std::max(first.values.cwiseAbs().maxCoeff(), 1e-300);
        for (std::size_t k = 1; k < opts.omegas.size(); ++k) {
          const PanelValues other =
              assemble_T0_minus_T(lin, sys.D(), hh, opts.omegas[k], panels, opts.n_cheb, opts.cauchy);
          out.omega_spread =
              std::max(out.omega_spread, (other.values - first.values).cwiseAbs().maxCoeff() / scale);
        }
      }
      out.cross_checked = true;
    }
    rep.pairs[p] = out;
  });
  for (const auto& p : rep.pairs) {
    rep.max_residual = std::max(rep.max_residual, p.residual);
    if (p.cross_checked) {
      ++rep.cross_checked;
      rep.max_transform_residual = std::max(rep.max_transform_residual, p.transform_residual);
      rep.max_omega_spread = std::max(rep.max_omega_spread, p.omega_spread);
    }
  }
  return rep;
}

Json to_json(const FlReport& r) {
  Json series = Json::array();
  for (const auto& s : r.series)
    series.push_back({{"pair", {s.a, s.b}}, {"d0", s.d0}, {"t", s.t}, {"log_ratio", s.log_ratio}});
  return {{"inconclusive", r.inconclusive},
          {"M_est", r.M_est},
          {"kappa_est", r.kappa_est},
          {"fit_residual", r.fit_residual},
          {"pairs_used", r.pairs_used},
          {"pairs_excluded", r.pairs_excluded},
          {"series", series}};
}

Json to_json(const GrFReport& r) {
  return {{"n_keep", r.n_keep},
          {"inconclusive", r.inconclusive},
          {"min_ratio", r.min_ratio},
          {"argmin_pair", {r.arg_a, r.arg_b}},
          {"histogram", r.histogram},
          {"pairs", r.pairs}};
}

Json to_json(const DecompositionReport& r) {
  Json pairs = Json::array();
  for (const auto& p : r.pairs) {
    Json j = {{"pair", {p.a, p.b}}, {"dG_norm", p.dG_norm}, {"residual", p.residual}};
    if (p.cross_checked) {
      j["transform_residual"] = p.transform_residual;
      j["omega_spread"] = p.omega_spread;
    }
    pairs.push_back(j);
  }
  return {{"max_residual", r.max_residual},
          {"max_transform_residual", r.max_transform_residual},
          {"max_omega_spread", r.max_omega_spread},
          {"cross_checked", r.cross_checked},
          {"pairs", pairs}};
}

}  // namespace rdc
