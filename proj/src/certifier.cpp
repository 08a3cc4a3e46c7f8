#include "rdc/certifier.hpp"

#include "rdc/errors.hpp"
#include "rdc/linearization.hpp"
#include "rdc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <limits>

namespace rdc {

namespace {

constexpr double kFloor = 1e-12;
constexpr double kCommuteTol = 1e-10;
constexpr double kSymmetryTol = 1e-10;
constexpr double kDiagonalTol = 1e-12;
constexpr double kAssumptionTol = 1e-10;
constexpr double kBasisTol = 1e-8;
constexpr double kReflectionTol = 1e-10;
constexpr double kGapFraction = 1e-6;
constexpr double kImagFraction = 1e-8;
constexpr int kBasisAttempts = 3;

Json matrix_json(const Mat& a) {
  Json rows = Json::array();
  for (int r = 0; r < a.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < a.cols(); ++c) row.push_back(a(r, c));
    rows.push_back(row);
  }
  return rows;
}

std::string source_name(ConditionSample::Source s) {
  switch (s) {
    case ConditionSample::Source::node: return "node";
    case ConditionSample::Source::hull: return "hull";
    case ConditionSample::Source::box: return "box";
  }
  return "node";
}

Json sample_json(const ConditionSample& s) {
  Json u = Json::array();
  for (int j = 0; j < s.u.size(); ++j) u.push_back(s.u[j]);
  return {{"x", s.x}, {"u", u}, {"source", source_name(s.source)}};
}

std::vector<Mat> evaluate_f(const RDCSystem& sys, const std::vector<ConditionSample>& samples) {
  std::vector<Mat> out(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) { out[i] = sys.f(samples[i].x, samples[i].u); });
  return out;
}

ConditionReport make_report(ConditionId id, double violation, double tol) {
  ConditionReport r;
  r.id = id;
  r.violation = violation;
  r.tolerance = tol;
  r.verdict = violation <= tol ? Verdict::pass : Verdict::fail;
  return r;
}

// Index of the largest value (first on ties).
std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

struct PairWorst {
  double violation = 0.0;
  std::size_t i = 0, j = 0;
};

// Pairs examined by the commutator sweeps: all pairs when they fit the budget,
// otherwise a random subset plus every sample against fixed anchors.
std::vector<std::pair<std::size_t, std::size_t>> commutator_pairs(std::size_t n,
                                                                  const CommutatorOptions& opts) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (n < 2) return pairs;
  const long total = static_cast<long>(n) * static_cast<long>(n - 1) / 2;
  if (total <= opts.pair_budget) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    return pairs;
  }
  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (long p = 0; p < opts.pair_budget; ++p) {
    const std::size_t i = pick(rng), j = pick(rng);
    if (i != j) pairs.emplace_back(std::min(i, j), std::max(i, j));
  }
  for (int a = 0; a < opts.anchors; ++a) {
    const std::size_t anchor = pick(rng);
    for (std::size_t i = 0; i < n; ++i)
      if (i != anchor) pairs.emplace_back(std::min(i, anchor), std::max(i, anchor));
  }
  return pairs;
}

PairWorst worst_commutator(const std::vector<Mat>& mats, const CommutatorOptions& opts) {
  const auto pairs = commutator_pairs(mats.size(), opts);
  std::vector<double> viol(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t p) {
    const Mat& a = mats[pairs[p].first];
    const Mat& b = mats[pairs[p].second];
    viol[p] = commutator(a, b).norm() / std::max(a.norm() * b.norm(), kFloor);
  });
  PairWorst w;
  if (pairs.empty()) return w;
  const std::size_t p = argmax(viol);
  w.violation = viol[p];
  w.i = pairs[p].first;
  w.j = pairs[p].second;
  return w;
}

// Ratio of the required to the achieved separation/realness; > 1 means the
// requirement fails.
double distinct_real_deficiency(const Mat& a) {
  const double spread = std::max(a.norm(), kFloor);
  const CVec ev = eigenvalues(a);
  double max_imag = 0.0, min_gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < ev.size(); ++i) {
    max_imag = std::max(max_imag, std::abs(ev[i].imag()));
    for (int j = i + 1; j < ev.size(); ++j) min_gap = std::min(min_gap, std::abs(ev[i] - ev[j]));
  }
  const double imag_def = max_imag / (kImagFraction * spread);
  const double gap_def = ev.size() < 2 ? 0.0 : kGapFraction * spread / std::max(min_gap, 1e-300);
  return std::max(imag_def, gap_def);
}

bool has_distinct_real_eigs(const Mat& Q) { return distinct_real_deficiency(Q) <= 1.0; }

Mat normalise_columns(Mat C) {
  for (int c = 0; c < C.cols(); ++c) {
    C.col(c) /= C.col(c).norm();
    for (int r = 0; r < C.rows(); ++r) {
      if (std::abs(C(r, c)) > kFloor) {
        if (C(r, c) < 0) C.col(c) = -C.col(c);
        break;
      }
    }
  }
  return C;
}

}  // namespace

std::string to_string(ConditionId id) {
  switch (id) {
    case ConditionId::assumption35: return "assumption35";
    case ConditionId::thm43_diagonal: return "thm43_diagonal";
    case ConditionId::thm45_distinct_commuting: return "thm45_distinct_commuting";
    case ConditionId::thm46_symmetric_commuting: return "thm46_symmetric_commuting";
    case ConditionId::lemma44_similarity: return "lemma44_similarity";
    case ConditionId::prop51i: return "prop51i";
    case ConditionId::prop51ii: return "prop51ii";
    case ConditionId::remark52: return "remark52";
    case ConditionId::example53: return "example53";
    case ConditionId::example54: return "example54";
    case ConditionId::prop55: return "prop55";
  }
  return "unknown";
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

std::string to_string(Stage s) {
  switch (s) {
    case Stage::structure: return "structure";
    case Stage::assumption35: return "assumption35";
    case Stage::commuting_family: return "commuting_family";
    case Stage::monodromy_pd: return "monodromy_pd";
    case Stage::spectrum_gap: return "spectrum_gap";
    case Stage::none: return "none";
  }
  return "none";
}

Json to_json(const ConditionReport& r) {
  Json j = {{"condition", to_string(r.id)},
            {"verdict", to_string(r.verdict)},
            {"violation", r.violation},
            {"tolerance", r.tolerance}};
  if (r.witness) j["witness"] = sample_json(*r.witness);
  if (r.witness_other) j["witness_other"] = sample_json(*r.witness_other);
  if (r.C) j["C"] = matrix_json(*r.C);
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

std::vector<ConditionSample> hull_samples(const RDCSystem& sys, const AttractorSample& sample,
                                          const HullSampleOptions& opts) {
  std::vector<ConditionSample> out;
  double max_u = 0.0;
  auto add_field = [&](const SpectralField& field, ConditionSample::Source src) {
    const NodalArray v = to_nodal(field);
    const Grid& grid = field.grid();
    for (int i = 0; i < grid.size(); i += std::max(1, opts.node_stride)) {
      ConditionSample s;
      s.x = grid.x(i);
      s.u = v.col(i);
      s.source = src;
      max_u = std::max(max_u, s.u.norm());
      out.push_back(std::move(s));
    }
  };
  for (const auto& snap : sample.snapshots) add_field(snap, ConditionSample::Source::node);
  for (const auto& hp : sample.hull_points) add_field(hp.field, ConditionSample::Source::hull);

  const double r = std::min(opts.box_factor * max_u, sys.r_max());
  if (r <= 0.0 || opts.box_points <= 0) return out;
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int m = sys.m();
  for (int p = 0; p < opts.box_points; ++p) {
    ConditionSample s;
    s.x = unif(rng);
    Vec dir(m);
    for (int j = 0; j < m; ++j) dir[j] = gauss(rng);
    const double n = dir.norm();
    s.u = n > 0 ? Vec(dir * (r * std::pow(unif(rng), 1.0 / m) / n)) : Vec(Vec::Zero(m));
    // stay inside the componentwise state box
    s.u = s.u.cwiseMax(-sys.r_max()).cwiseMin(sys.r_max());
    s.source = ConditionSample::Source::box;
    out.push_back(std::move(s));
  }
  return out;
}

ConditionReport check_assumption35(const RDCSystem& sys, const std::vector<ConditionSample>& samples) {
  if (sys.D().is_scalar()) {
    ConditionReport r = make_report(ConditionId::assumption35, 0.0, kAssumptionTol);
    r.note = "scalar diffusion commutes with every f";
    return r;
  }
  const Mat D = sys.D().matrix();
  const std::vector<Mat> fs = evaluate_f(sys, samples);
  std::vector<double> viol(fs.size(), 0.0);
  for (std::size_t i = 0; i < fs.size(); ++i)
    viol[i] = (D * fs[i] - fs[i] * D).norm() / std::max(fs[i].norm(), kFloor);
  if (viol.empty()) {
    ConditionReport r = make_report(ConditionId::assumption35, 0.0, kAssumptionTol);
    r.verdict = Verdict::inconclusive;
    r.note = "no samples";
    return r;
  }
  const std::size_t k = argmax(viol);
  ConditionReport r = make_report(ConditionId::assumption35, viol[k], kAssumptionTol);
  r.witness = samples[k];
  return r;
}

ConditionReport check_diagonal(const RDCSystem& sys, const std::vector<ConditionSample>& samples) {
  const std::vector<Mat> fs = evaluate_f(sys, samples);
  std::vector<double> viol(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) viol[i] = max_offdiag(fs[i]);
  if (viol.empty()) {
    ConditionReport r = make_report(ConditionId::thm43_diagonal, 0.0, kDiagonalTol);
    r.verdict = Verdict::inconclusive;
    r.note = "no samples";
    return r;
  }
  const std::size_t k = argmax(viol);
  double scale = 0.0;
  for (const Mat& f : fs) scale = std::max(scale, f.norm());
  const double tol = std::max(kDiagonalTol * scale, kFloor);
  ConditionReport r = make_report(ConditionId::thm43_diagonal, viol[k], tol);
  r.witness = samples[k];
  return r;
}

ConditionReport check_commuting_family(const RDCSystem& sys,
                                       const std::vector<ConditionSample>& samples,
                                       FamilyRequirement req, const CommutatorOptions& opts) {
  const ConditionId id = req == FamilyRequirement::symmetric ? ConditionId::thm46_symmetric_commuting
                                                             : ConditionId::thm45_distinct_commuting;
  if (samples.size() < 2) {
    ConditionReport r = make_report(id, 0.0, kCommuteTol);
    r.verdict = Verdict::inconclusive;
    r.note = "needs at least two samples";
    return r;
  }
  const std::vector<Mat> fs = evaluate_f(sys, samples);

  std::vector<double> structure(fs.size());
  parallel_for(fs.size(), [&](std::size_t i) {
    structure[i] = req == FamilyRequirement::symmetric
                       ? asymmetry(fs[i]) / std::max(fs[i].norm(), kFloor) / kSymmetryTol
                       : distinct_real_deficiency(fs[i]);
  });
  const std::size_t ks = argmax(structure);
  if (structure[ks] > 1.0) {
    ConditionReport r = make_report(id, structure[ks], 1.0);
    r.witness = samples[ks];
    r.note = req == FamilyRequirement::symmetric
                 ? "f is not symmetric (violation in units of the relative tolerance)"
                 : "eigenvalues of f are not distinct and real (violation in units of the required separation)";
    return r;
  }

  const PairWorst w = worst_commutator(fs, opts);
  ConditionReport r = make_report(id, w.violation, kCommuteTol);
  r.witness = samples[w.i];
  r.witness_other = samples[w.j];
  if (r.verdict == Verdict::fail) {
    r.note = "commutator of f at the two witnesses";
    return r;
  }
  const EigenbasisResult basis = build_common_eigenbasis(
      fs, req == FamilyRequirement::symmetric ? EigenbasisRoute::symmetric_similarity
                                              : EigenbasisRoute::diagonal);
  if (basis.C) r.C = basis.C;
  else r.note = "common eigenbasis not validated: " + basis.note;
  return r;
}

EigenbasisResult build_common_eigenbasis(const std::vector<Mat>& family, EigenbasisRoute route,
                                         uint64_t seed) {
  EigenbasisResult res;
  if (family.empty()) {
    res.note = "empty family";
    return res;
  }
  const int m = static_cast<int>(family.front().rows());
  bool symmetric = true;
  for (const Mat& M : family)
    if (asymmetry(M) > kSymmetryTol * std::max(M.norm(), kFloor)) symmetric = false;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int attempt = 1; attempt <= kBasisAttempts; ++attempt) {
    res.attempts = attempt;
    Mat S = Mat::Zero(m, m);
    for (const Mat& M : family) S += gauss(rng) * M / std::max(M.norm(), kFloor);
    Mat C;
    if (symmetric) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(0.5 * (S + S.transpose())));
      C = es.eigenvectors();
    } else {
      Eigen::EigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(S)};
      if (es.eigenvalues().imag().cwiseAbs().maxCoeff() > kImagFraction * std::max(S.norm(), kFloor) ||
          es.eigenvectors().imag().norm() > kBasisTol) {
        res.note = "combination has complex eigenvalues";
        continue;
      }
      C = es.eigenvectors().real();
    }
    C = normalise_columns(C);
    Eigen::FullPivLU<Eigen::MatrixXd> lu{Eigen::MatrixXd(C)};
    if (!lu.isInvertible() || lu.rcond() < 1e-12) {
      res.note = "eigenvector matrix is singular";
      continue;
    }
    const Mat Cinv = lu.inverse();
    double worst = 0.0;
    for (const Mat& M : family) {
      const Mat H = Cinv * M * C;
      const double scale = std::max(M.norm(), kFloor);
      worst = std::max(worst, (route == EigenbasisRoute::diagonal ? max_offdiag(H) : asymmetry(H)) / scale);
    }
    res.validation = worst;
    if (worst <= kBasisTol) {
      res.C = C;
      res.note.clear();
      return res;
    }
    res.note = "C^{-1} M C fails validation";
  }
  return res;
}

ConditionReport check_similarity(const RDCSystem& sys, const std::vector<ConditionSample>& samples,
                                 const CommutatorOptions& opts) {
  const ConditionId id = ConditionId::lemma44_similarity;
  if (samples.size() < 2) {
    ConditionReport r = make_report(id, 0.0, kBasisTol);
    r.verdict = Verdict::inconclusive;
    r.note = "needs at least two samples";
    return r;
  }
  std::vector<Mat> fam = evaluate_f(sys, samples);
  const Mat Dinv = sys.D().inverse();
  for (Mat& M : fam) M = Dinv * M;
  const PairWorst w = worst_commutator(fam, opts);
  if (w.violation > kCommuteTol) {
    ConditionReport r = make_report(id, w.violation, kCommuteTol);
    r.witness = samples[w.i];
    r.witness_other = samples[w.j];
    r.note = "D^{-1} f does not commute at the two witnesses";
    return r;
  }
  const EigenbasisResult basis = build_common_eigenbasis(fam, EigenbasisRoute::symmetric_similarity);
  if (!basis.C) {
    ConditionReport r = make_report(id, basis.validation, kBasisTol);
    r.verdict = Verdict::inconclusive;
    r.note = "no validated common eigenbasis after " + std::to_string(basis.attempts) +
             " attempts: " + basis.note;
    return r;
  }
  // H = C^{-1} D^{-1} f C must be symmetric and commute
  const Mat Cinv = basis.C->inverse();
  std::vector<Mat> H(fam.size());
  for (std::size_t i = 0; i < fam.size(); ++i) H[i] = Cinv * fam[i] * *basis.C;
  const PairWorst wh = worst_commutator(H, opts);
  const double v = std::max(basis.validation, wh.violation);
  ConditionReport r = make_report(id, v, kBasisTol);
  r.C = basis.C;
  r.witness = samples[wh.i];
  r.witness_other = samples[wh.j];
  return r;
}

ConditionReport check_prop51_matrix(const Mat& Q, Prop51Variant variant) {
  if (variant == Prop51Variant::symmetric) {
    ConditionReport r = make_report(ConditionId::prop51ii, asymmetry(Q) / std::max(Q.norm(), kFloor),
                                    kSymmetryTol);
    return r;
  }
  if (Q.rows() == 2) {
    const double disc = (Q(0, 0) - Q(1, 1)) * (Q(0, 0) - Q(1, 1)) + 4.0 * Q(0, 1) * Q(1, 0);
    ConditionReport r;
    r.id = ConditionId::prop51i;
    r.verdict = disc > 0.0 ? Verdict::pass : Verdict::fail;
    r.violation = -disc;
    r.tolerance = 0.0;
    r.note = "discriminant " + std::to_string(disc);
    return r;
  }
  ConditionReport r = make_report(ConditionId::prop51i, distinct_real_deficiency(Q), 1.0);
  r.note = "eigenvalue separation test (violation in units of the required separation)";
  return r;
}

ConditionReport check_prop51(const RDCSystem& sys, const std::vector<ConditionSample>& samples,
                             Prop51Variant variant) {
  const ExampleSpec& spec = sys.spec();
  if (!spec.Q || !spec.f1) throw PreconditionError("system is not of the form f = f1(x,u) Q");
  ConditionReport r = check_prop51_matrix(*spec.Q, variant);
  if (variant == Prop51Variant::symmetric || r.verdict != Verdict::pass) return r;
  double min_f1 = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    const double v = std::abs(spec.f1(s.x, s.u));
    if (v < min_f1) {
      min_f1 = v;
      r.witness = s;
    }
  }
  if (!(min_f1 > kFloor)) {
    r.verdict = Verdict::fail;
    r.violation = kFloor - min_f1;
    r.tolerance = 0.0;
    r.note = "f1 vanishes at the witness";
  } else {
    r.witness.reset();
    r.note += "; min |f1| = " + std::to_string(min_f1);
  }
  return r;
}

ConditionReport check_remark52(const Mat& Q) {
  ConditionReport r;
  r.id = ConditionId::remark52;
  if (Q.rows() != 2) {
    r.verdict = Verdict::inconclusive;
    r.note = "discriminant test needs m = 2";
    return r;
  }
  const double disc = (Q(0, 0) - Q(1, 1)) * (Q(0, 0) - Q(1, 1)) + 4.0 * Q(0, 1) * Q(1, 0);
  r.verdict = disc > 0.0 ? Verdict::pass : Verdict::fail;
  r.violation = -disc;
  r.tolerance = 0.0;
  r.note = "discriminant " + std::to_string(disc);
  return r;
}

ConditionReport check_example53(const RDCSystem& sys, const std::vector<ConditionSample>& samples) {
  if (sys.m() != 2) {
    ConditionReport r = make_report(ConditionId::example53, 0.0, kDiagonalTol);
    r.verdict = Verdict::inconclusive;
    r.note = "form [[a,b],[b,a]] needs m = 2";
    return r;
  }
  const std::vector<Mat> fs = evaluate_f(sys, samples);
  std::vector<double> viol(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const Mat& f = fs[i];
    viol[i] = std::max(std::abs(f(0, 0) - f(1, 1)), std::abs(f(0, 1) - f(1, 0))) /
              std::max(f.norm(), kFloor);
  }
  const std::size_t k = viol.empty() ? 0 : argmax(viol);
  ConditionReport r = make_report(ConditionId::example53, viol.empty() ? 0.0 : viol[k], kDiagonalTol);
  if (!viol.empty()) r.witness = samples[k];
  return r;
}

ConditionReport check_example54(const RDCSystem& sys, const std::vector<ConditionSample>& samples) {
  const auto& Q = sys.spec().Q;
  if (!Q) throw PreconditionError("system has no fixed matrix Q");
  if (!has_distinct_real_eigs(*Q)) {
    ConditionReport r = make_report(ConditionId::example54, distinct_real_deficiency(*Q), 1.0);
    r.note = "Q has no m distinct real eigenvalues";
    return r;
  }
  const std::vector<Mat> fs = evaluate_f(sys, samples);
  std::vector<double> viol(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i)
    viol[i] = commutator(fs[i], *Q).norm() / std::max(fs[i].norm() * Q->norm(), kFloor);
  const std::size_t k = viol.empty() ? 0 : argmax(viol);
  ConditionReport r = make_report(ConditionId::example54, viol.empty() ? 0.0 : viol[k], kCommuteTol);
  if (!viol.empty()) r.witness = samples[k];
  return r;
}

ConditionReport check_prop55(const std::function<Mat(double)>& Q, int n_nodes) {
  std::vector<Mat> vals(n_nodes);
  double scale = 0.0;
  for (int i = 0; i < n_nodes; ++i) {
    vals[i] = Q(static_cast<double>(i) / n_nodes);
    scale = std::max(scale, vals[i].norm());
  }
  double worst = 0.0;
  int arg = 0;
  for (int i = 0; i < n_nodes; ++i) {
    const double v = (vals[i].transpose() - vals[(n_nodes - i) % n_nodes]).norm();
    if (v > worst) {
      worst = v;
      arg = i;
    }
  }
  ConditionReport r = make_report(ConditionId::prop55, worst / std::max(scale, kFloor), kReflectionTol);
  ConditionSample w;
  w.x = static_cast<double>(arg) / n_nodes;
  r.witness = w;
  return r;
}

ConditionReport check_prop55(const RDCSystem& sys, const std::vector<ConditionSample>& samples,
                             int n_nodes) {
  const Vec zero = Vec::Zero(sys.m());
  double dep = 0.0;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Mat f = sys.f(samples[i].x, samples[i].u);
    const Mat f0 = sys.f(samples[i].x, zero);
    const double v = (f - f0).norm() / std::max(f0.norm(), 1.0);
    if (v > dep) {
      dep = v;
      arg = i;
    }
  }
  if (dep > kFloor) {
    ConditionReport r = make_report(ConditionId::prop55, dep, kFloor);
    r.verdict = Verdict::inconclusive;
    r.witness = samples[arg];
    r.note = "f depends on u; the reflection test needs f = Q(x)";
    return r;
  }
  return check_prop55([&sys, &zero](double x) { return sys.f(x, zero); }, n_nodes);
}

namespace {

const ConditionReport* find(const CertificationReport& rep, ConditionId id) {
  for (const auto& c : rep.conditions)
    if (c.id == id) return &c;
  return nullptr;
}

bool passes(const CertificationReport& rep, ConditionId id) {
  const ConditionReport* c = find(rep, id);
  return c && c->verdict == Verdict::pass;
}

void set_outcome(CertificationReport& rep, const std::string& verdict, Stage stage,
                 const std::string& remark) {
  rep.verdict = verdict;
  rep.failing_stage = stage;
  rep.remark = remark;
}

}  // namespace

void final_verdict(CertificationReport& report, const DiffusionMatrix& D) {
  report.route.clear();
  const bool diagonal = passes(report, ConditionId::thm43_diagonal);
  if (diagonal) {
    report.route = "theorem43";
  } else {
    if (!D.is_scalar() && !passes(report, ConditionId::assumption35)) {
      set_outcome(report, "not_certified", Stage::assumption35,
                  "nonscalar diffusion does not commute with the convection matrix");
      return;
    }
    if (passes(report, ConditionId::thm46_symmetric_commuting)) report.route = "theorem46";
    else if (passes(report, ConditionId::thm45_distinct_commuting)) report.route = "theorem45";
    else if (passes(report, ConditionId::lemma44_similarity)) report.route = "lemma44_similarity";
    else if (passes(report, ConditionId::prop55)) report.route = "remark42b";
  }
  if (report.route.empty()) {
    set_outcome(report, "not_certified", Stage::commuting_family,
                "no structural condition on the convection matrix holds on the samples");
    return;
  }
  if (report.certificates.empty()) {
    set_outcome(report, "inconclusive", Stage::monodromy_pd, "no monodromy certificates");
    return;
  }
  for (const auto& pc : report.certificates) {
    const bool ok = diagonal ? pc.cert.verdict == PdVerdict::diagonal_positive_definite
                             : pc.cert.positive();
    if (!ok) {
      set_outcome(report, "not_certified", Stage::monodromy_pd,
                  "monodromy of pair (" + std::to_string(pc.a) + "," + std::to_string(pc.b) +
                      ") is not similar to a positive definite matrix");
      return;
    }
  }
  if (!report.spectrum) {
    set_outcome(report, "inconclusive", Stage::spectrum_gap, "spectrum not computed");
    return;
  }
  const SpectrumReport& sp = *report.spectrum;
  if (!sp.in_sector) {
    set_outcome(report, "not_certified", Stage::spectrum_gap, "lattice leaves the sector");
    return;
  }
  if (sp.gap == GapVerdict::not_consistent) {
    set_outcome(report, "not_certified", Stage::spectrum_gap, "strip asymptotics not consistent");
    return;
  }
  if (sp.gap == GapVerdict::inconclusive) {
    set_outcome(report, "inconclusive", Stage::spectrum_gap, "too few strips for the decay test");
    return;
  }
  set_outcome(report, "certified", Stage::none,
              "conditions verified on sampled points of the hull of the attractor; this is "
              "numerical evidence, not a proof for every point");
}

CertificationReport certify(const RDCSystem& sys, const AttractorSample& sample,
                            const CertifyConfig& config) {
  CertificationReport rep;
  rep.system = sys.name();
  const std::vector<ConditionSample> samples = hull_samples(sys, sample, config.hull);
  rep.n_samples = static_cast<int>(samples.size());

  rep.conditions.push_back(check_assumption35(sys, samples));
  rep.conditions.push_back(check_diagonal(sys, samples));
  rep.conditions.push_back(
      check_commuting_family(sys, samples, FamilyRequirement::symmetric, config.commutator));
  rep.conditions.push_back(
      check_commuting_family(sys, samples, FamilyRequirement::distinct_real_eigs, config.commutator));
  rep.conditions.push_back(check_similarity(sys, samples, config.commutator));
  const ExampleSpec& spec = sys.spec();
  if (spec.Q && spec.f1) {
    rep.conditions.push_back(check_prop51(sys, samples, Prop51Variant::distinct));
    rep.conditions.push_back(check_prop51(sys, samples, Prop51Variant::symmetric));
    rep.conditions.push_back(check_remark52(*spec.Q));
  }
  if (spec.name == "example53") rep.conditions.push_back(check_example53(sys, samples));
  if (spec.name == "example54" && spec.Q) rep.conditions.push_back(check_example54(sys, samples));
  rep.conditions.push_back(check_prop55(sys, samples));

  // C for the similarity route: D^{-1} f eigenbasis, else the f eigenbasis
  std::optional<Mat> C_hint;
  for (ConditionId id : {ConditionId::lemma44_similarity, ConditionId::thm45_distinct_commuting}) {
    const ConditionReport* c = find(rep, id);
    if (!C_hint && c && c->verdict == Verdict::pass && c->C) C_hint = c->C;
  }

  std::vector<std::pair<int, int>> pairs;
  for (const auto& p : sample.pair_index)
    if (p.first != p.second) pairs.push_back(p);
  if (pairs.empty() && !sample.snapshots.empty()) pairs.emplace_back(0, 0);
  if (static_cast<int>(pairs.size()) > config.max_pairs) {
    std::vector<std::pair<int, int>> chosen;
    for (int i = 0; i < config.max_pairs; ++i)
      chosen.push_back(pairs[static_cast<std::size_t>(i) * pairs.size() / config.max_pairs]);
    pairs = chosen;
  }
  rep.certificates.resize(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    const auto [a, b] = pairs[i];
    const MatrixCurve B = build_B(sys, sample.snapshots[a], sample.snapshots[b], config.n_quad);
    rep.certificates[i] = {a, b, certify_pd(B, sys.D(), C_hint, config.cauchy)};
  });

  bool all_positive = !rep.certificates.empty();
  for (const auto& pc : rep.certificates) all_positive = all_positive && pc.cert.positive();
  if (all_positive) {
    std::vector<MonodromyCertificate> certs;
    for (const auto& pc : rep.certificates) certs.push_back(pc.cert);
    try {
      const double omega = choose_omega(certs, sys.D());
      SpectrumReport sp = eig_lattice(certs, sys.D(), omega, config.K);
      sp.theta = config.theta;
      gap_check(sp, config.alpha, sys.D());
      rep.spectrum = std::move(sp);
    } catch (const RouteMismatch& e) {
      rep.remark = e.what();
    }
  }
  const std::string lattice_remark = rep.remark;
  final_verdict(rep, sys.D());
  if (!lattice_remark.empty() && !rep.certified()) rep.remark += "; " + lattice_remark;
  return rep;
}

Json to_json(const CertificationReport& r) {
  Json conditions = Json::array();
  for (const auto& c : r.conditions) conditions.push_back(to_json(c));
  Json certs = Json::array();
  for (const auto& pc : r.certificates) {
    Json j = to_json(pc.cert);
    j["pair"] = {pc.a, pc.b};
    certs.push_back(j);
  }
  Json j = {{"system", r.system},
            {"verdict", r.verdict},
            {"route", r.route},
            {"failing_stage", to_string(r.failing_stage)},
            {"remark", r.remark},
            {"n_samples", r.n_samples},
            {"conditions", conditions},
            {"certificates", certs}};
  j["spectrum"] = r.spectrum ? to_json(*r.spectrum) : Json();
  return j;
}

}  // namespace rdc
