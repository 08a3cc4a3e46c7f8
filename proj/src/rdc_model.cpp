#include "rdc/rdc_model.hpp"

#include "rdc/errors.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace rdc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<double> to_std(const Vec& u) { return std::vector<double>(u.data(), u.data() + u.size()); }

bool all_finite(const Mat& a) { return a.allFinite(); }

double fd_step(double value) { return 1e-5 * (1.0 + std::abs(value)); }

Mat mat2(double a, double b, double c, double d) {
  Mat out(2, 2);
  out << a, b, c, d;
  return out;
}

Mat read_matrix(const Json& j, int m) {
  if (!j.is_array() || static_cast<int>(j.size()) != m)
    throw ConfigError("matrix must be an array of " + std::to_string(m) + " rows");
  Mat out(m, m);
  for (int r = 0; r < m; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != m)
      throw ConfigError("matrix row has wrong length");
    for (int c = 0; c < m; ++c) out(r, c) = j[r][c].get<double>();
  }
  return out;
}

DiffusionMatrix read_diffusion(const Json& params, int m, const Eigen::VectorXd& fallback) {
  if (!params.contains("d")) return DiffusionMatrix(fallback);
  const Json& d = params["d"];
  if (d.is_number()) return DiffusionMatrix::scalar(m, d.get<double>());
  if (!d.is_array() || static_cast<int>(d.size()) != m)
    throw ConfigError("\"d\" must have " + std::to_string(m) + " entries");
  Eigen::VectorXd v(m);
  for (int j = 0; j < m; ++j) v[j] = d[j].get<double>();
  return DiffusionMatrix(v);
}

template <typename T>
T param(const Json& params, const char* key, T fallback) {
  return params.contains(key) ? params[key].get<T>() : fallback;
}

// g(x,u) = r u - |u|^2 u + sigma * (cos 2 pi x, sin 2 pi x, 0, ...)
void set_cubic_reaction(SystemFunctions& fns, int m, double r, double sigma) {
  fns.g = [m, r, sigma](double x, const Vec& u) {
    Vec out = (r - u.squaredNorm()) * u;
    if (sigma != 0.0) {
      out[0] += sigma * std::cos(kTwoPi * x);
      if (m > 1) out[1] += sigma * std::sin(kTwoPi * x);
    }
    return out;
  };
  fns.g_u = [m, r](double, const Vec& u) {
    Mat out = (r - u.squaredNorm()) * identity(m);
    out -= 2.0 * u * u.transpose();
    return out;
  };
}

RDCSystem make_scalar_burgers(const Json& p) {
  const double r = param(p, "r", 2.0);
  const double drift = param(p, "drift", 1.0);
  const double sigma = param(p, "sigma", 0.0);
  SystemFunctions fns;
  fns.f = [drift](double, const Vec& u) { return Mat::Constant(1, 1, u[0] + drift); };
  fns.f_u = [](double, const Vec&, std::vector<Mat>& dfdu) {
    dfdu.assign(1, Mat::Constant(1, 1, 1.0));
  };
  fns.f_x = [](double, const Vec&) { return Mat::Zero(1, 1).eval(); };
  fns.g = [r, sigma](double x, const Vec& u) {
    Vec out(1);
    out[0] = r * u[0] - u[0] * u[0] * u[0] + sigma * std::cos(kTwoPi * x);
    return out;
  };
  fns.g_u = [r](double, const Vec& u) { return Mat::Constant(1, 1, r - 3.0 * u[0] * u[0]); };
  ExampleSpec spec{"scalar_burgers", p, std::nullopt, {}, {}};
  const DiffusionMatrix D = read_diffusion(p, 1, Eigen::VectorXd::Constant(1, 0.0025));
  return RDCSystem(1, D, fns, DerivativeMode::analytic, spec, param(p, "r_max", 50.0));
}

RDCSystem make_diag_theorem43(const Json& p) {
  const double d = param(p, "d_base", 0.05);
  const double shift = param(p, "shift", 0.5);
  SystemFunctions fns;
  fns.f = [shift](double, const Vec& u) { return mat2(u[0], 0.0, 0.0, shift + u[1]); };
  fns.f_u = [](double, const Vec&, std::vector<Mat>& dfdu) {
    dfdu = {mat2(1, 0, 0, 0), mat2(0, 0, 0, 1)};
  };
  fns.f_x = [](double, const Vec&) { return Mat::Zero(2, 2).eval(); };
  // componentwise g_i = r u_i - u_i^3 + forcing keeps B0 and Q diagonal
  const double r = param(p, "r", 2.0), sigma = param(p, "sigma", 0.5);
  fns.g = [r, sigma](double x, const Vec& u) {
    Vec out = r * u - u.cwiseProduct(u).cwiseProduct(u);
    out[0] += sigma * std::cos(kTwoPi * x);
    out[1] += sigma * std::sin(kTwoPi * x);
    return out;
  };
  fns.g_u = [r](double, const Vec& u) {
    return Mat((r - 3.0 * u.array().square()).matrix().asDiagonal());
  };
  Eigen::VectorXd dv(2);
  dv << d, 4.0 * d;
  ExampleSpec spec{"diag_theorem43", p, std::nullopt, {}, {}};
  return RDCSystem(2, read_diffusion(p, 2, dv), fns, DerivativeMode::analytic, spec,
                   param(p, "r_max", 10.0));
}

RDCSystem make_prop51(const std::string& name, const Json& p, Mat Q,
                      std::function<double(double, const Vec&)> f1,
                      std::function<Vec(double, const Vec&)> df1du,
                      std::function<double(double, const Vec&)> df1dx) {
  if (p.contains("Q")) Q = read_matrix(p["Q"], 2);
  SystemFunctions fns;
  fns.f = [Q, f1](double x, const Vec& u) { return (f1(x, u) * Q).eval(); };
  fns.f_u = [Q, df1du](double x, const Vec& u, std::vector<Mat>& dfdu) {
    const Vec grad = df1du(x, u);
    dfdu.resize(2);
    for (int j = 0; j < 2; ++j) dfdu[j] = grad[j] * Q;
  };
  fns.f_x = [Q, df1dx](double x, const Vec& u) { return (df1dx(x, u) * Q).eval(); };
  set_cubic_reaction(fns, 2, param(p, "r", 2.0), param(p, "sigma", 0.5));
  ExampleSpec spec{name, p, Q, f1, {}};
  return RDCSystem(2, read_diffusion(p, 2, Eigen::VectorXd::Constant(2, 0.05)), fns,
                   DerivativeMode::analytic, spec, param(p, "r_max", 10.0));
}

RDCSystem make_example53(const Json& p) {
  const double b = param(p, "b", 1.0);
  SystemFunctions fns;
  fns.f = [b](double, const Vec& u) { return mat2(u[0], b, b, u[0]); };
  fns.f_u = [](double, const Vec&, std::vector<Mat>& dfdu) {
    dfdu = {mat2(1, 0, 0, 1), Mat::Zero(2, 2)};
  };
  fns.f_x = [](double, const Vec&) { return Mat::Zero(2, 2).eval(); };
  set_cubic_reaction(fns, 2, param(p, "r", 2.0), param(p, "sigma", 0.5));
  ExampleSpec spec{"example53", p, std::nullopt, {}, {}};
  return RDCSystem(2, read_diffusion(p, 2, Eigen::VectorXd::Constant(2, 0.05)), fns,
                   DerivativeMode::analytic, spec, param(p, "r_max", 10.0));
}

// f = a0 E + a1 Q + a2 Q^2 with a0 = u2, a1 = u1, a2 = const.
RDCSystem make_example54(const Json& p) {
  Mat Q = p.contains("Q") ? read_matrix(p["Q"], 2) : mat2(1.0, 0.5, 0.5, -0.5);
  const double a2 = param(p, "a2", 0.25);
  const Mat Q2 = Q * Q;
  SystemFunctions fns;
  fns.f = [Q, Q2, a2](double, const Vec& u) {
    return (u[1] * identity(2) + u[0] * Q + a2 * Q2).eval();
  };
  fns.f_u = [Q](double, const Vec&, std::vector<Mat>& dfdu) { dfdu = {Q, identity(2)}; };
  fns.f_x = [](double, const Vec&) { return Mat::Zero(2, 2).eval(); };
  set_cubic_reaction(fns, 2, param(p, "r", 2.0), param(p, "sigma", 0.5));
  ExampleSpec spec{"example54", p, Q, {}, {}};
  return RDCSystem(2, read_diffusion(p, 2, Eigen::VectorXd::Constant(2, 0.05)), fns,
                   DerivativeMode::analytic, spec, param(p, "r_max", 10.0));
}

// f = Q(x) with Q^t(x) = Q(1-x).
RDCSystem make_prop55(const Json& p) {
  const std::string variant = param<std::string>(p, "variant", "mixed");
  std::function<Mat(double)> Qx;
  std::function<Mat(double)> dQx;
  const double pi = std::numbers::pi;
  if (variant == "mixed") {
    const double kappa = param(p, "kappa", 0.8);
    Qx = [kappa](double x) {
      const double c2 = std::cos(kTwoPi * x), c4 = std::cos(2.0 * kTwoPi * x);
      const double s2 = std::sin(kTwoPi * x);
      return mat2(1.0 + 0.5 * c2, 0.3 + kappa * s2, 0.3 - kappa * s2, -0.5 + c4);
    };
    dQx = [kappa](double x) {
      const double s2 = std::sin(kTwoPi * x), s4 = std::sin(2.0 * kTwoPi * x);
      const double c2 = std::cos(kTwoPi * x);
      return mat2(-0.5 * kTwoPi * s2, kappa * kTwoPi * c2, -kappa * kTwoPi * c2,
                  -2.0 * kTwoPi * s4);
    };
  } else if (variant == "sine") {
    Qx = [pi](double x) { return mat2(0.0, std::sin(pi * x), std::sin(pi * (1.0 - x)), 0.0); };
    dQx = [pi](double x) {
      return mat2(0.0, pi * std::cos(pi * x), -pi * std::cos(pi * (1.0 - x)), 0.0);
    };
  } else {
    throw ConfigError("prop55 variant must be \"mixed\" or \"sine\"");
  }
  SystemFunctions fns;
  fns.f = [Qx](double x, const Vec&) { return Qx(x); };
  fns.f_u = [](double, const Vec&, std::vector<Mat>& dfdu) { dfdu.assign(2, Mat::Zero(2, 2)); };
  fns.f_x = [dQx](double x, const Vec&) { return dQx(x); };
  set_cubic_reaction(fns, 2, param(p, "r", 2.0), param(p, "sigma", 0.5));
  ExampleSpec spec{"prop55", p, std::nullopt, {}, Qx};
  return RDCSystem(2, read_diffusion(p, 2, Eigen::VectorXd::Constant(2, 0.05)), fns,
                   DerivativeMode::analytic, spec, param(p, "r_max", 10.0));
}

// f = kappa J + u1 Q1 + u2 Q2 with J the rotation generator.
RDCSystem make_noncommuting(const Json& p) {
  const double kappa = param(p, "kappa", 0.25);
  const Mat J = mat2(0, 1, -1, 0);
  const Mat Q1 = mat2(1, 0, 0, -1);
  const Mat Q2 = mat2(0, 1, 1, 0);
  SystemFunctions fns;
  fns.f = [=](double, const Vec& u) { return (kappa * J + u[0] * Q1 + u[1] * Q2).eval(); };
  fns.f_u = [=](double, const Vec&, std::vector<Mat>& dfdu) { dfdu = {Q1, Q2}; };
  fns.f_x = [](double, const Vec&) { return Mat::Zero(2, 2).eval(); };
  set_cubic_reaction(fns, 2, param(p, "r", 2.0), param(p, "sigma", 0.5));
  ExampleSpec spec{"counterexample_style_noncommuting", p, std::nullopt, {}, {}};
  return RDCSystem(2, read_diffusion(p, 2, Eigen::VectorXd::Constant(2, 0.05)), fns,
                   DerivativeMode::analytic, spec, param(p, "r_max", 10.0));
}

struct Monomial {
  double coef = 1.0;
  std::vector<int> powers;
  int phi_kind = 0;  // 0: one, 1: cos, 2: sin
  int phi_k = 0;

  double phi(double x) const {
    switch (phi_kind) {
      case 1: return std::cos(kTwoPi * phi_k * x);
      case 2: return std::sin(kTwoPi * phi_k * x);
      default: return 1.0;
    }
  }
  double dphi(double x) const {
    switch (phi_kind) {
      case 1: return -kTwoPi * phi_k * std::sin(kTwoPi * phi_k * x);
      case 2: return kTwoPi * phi_k * std::cos(kTwoPi * phi_k * x);
      default: return 0.0;
    }
  }
  double value(const Vec& u) const {
    double v = coef;
    for (size_t i = 0; i < powers.size(); ++i) v *= std::pow(u[i], powers[i]);
    return v;
  }
  double partial(const Vec& u, int j) const {
    if (powers[j] == 0) return 0.0;
    double v = coef * powers[j];
    for (size_t i = 0; i < powers.size(); ++i)
      v *= std::pow(u[i], static_cast<int>(i) == j ? powers[i] - 1 : powers[i]);
    return v;
  }
};

Monomial read_monomial(const Json& t, int m) {
  Monomial mono;
  mono.coef = param(t, "coef", 1.0);
  mono.powers.assign(m, 0);
  if (t.contains("powers")) {
    if (static_cast<int>(t["powers"].size()) != m) throw ConfigError("powers must have m entries");
    for (int i = 0; i < m; ++i) {
      mono.powers[i] = t["powers"][i].get<int>();
      if (mono.powers[i] < 0) throw ConfigError("powers must be nonnegative");
    }
  }
  if (t.contains("phi")) {
    const std::string kind = param<std::string>(t["phi"], "kind", "one");
    mono.phi_k = param(t["phi"], "k", 0);
    if (kind == "cos") mono.phi_kind = 1;
    else if (kind == "sin") mono.phi_kind = 2;
    else if (kind != "one") throw ConfigError("phi kind must be one, cos or sin");
  }
  return mono;
}

}  // namespace

RDCSystem::RDCSystem(int m, DiffusionMatrix D, SystemFunctions fns, DerivativeMode mode,
                     ExampleSpec spec, double r_max)
    : m_(m), D_(std::move(D)), fns_(std::move(fns)), mode_(mode), spec_(std::move(spec)),
      r_max_(r_max) {
  if (m_ < 1 || m_ > kMaxComponents) throw ConfigError("component count out of range");
  if (D_.m() != m_) throw SizeMismatch("diffusion matrix size does not match m");
  if (!fns_.f || !fns_.g) throw ConfigError("system needs both f and g");
  if (mode_ == DerivativeMode::analytic && (!fns_.f_u || !fns_.g_u))
    throw ConfigError("analytic derivative mode needs f_u and g_u");
  if (!(r_max_ > 0.0)) throw ConfigError("r_max must be positive");
}

void RDCSystem::guard(double x, const Vec& u) const {
  if (!std::isfinite(x) || !u.allFinite())
    throw EvaluationFault(x, to_std(u), "non-finite argument");
  if (u.cwiseAbs().maxCoeff() > r_max_)
    throw EvaluationFault(x, to_std(u), "state outside |u_i| <= " + std::to_string(r_max_));
}

Mat RDCSystem::f(double x, const Vec& u) const {
  guard(x, u);
  Mat out = fns_.f(x, u);
  if (!all_finite(out)) throw EvaluationFault(x, to_std(u), "non-finite f");
  return out;
}

Vec RDCSystem::g(double x, const Vec& u) const {
  guard(x, u);
  Vec out = fns_.g(x, u);
  if (!out.allFinite()) throw EvaluationFault(x, to_std(u), "non-finite g");
  return out;
}

void RDCSystem::f_u(double x, const Vec& u, std::vector<Mat>& dfdu) const {
  guard(x, u);
  if (mode_ == DerivativeMode::analytic) {
    fns_.f_u(x, u, dfdu);
  } else {
    dfdu.resize(m_);
    for (int j = 0; j < m_; ++j) {
      const double h = fd_step(u[j]);
      Vec up = u, um = u;
      up[j] += h;
      um[j] -= h;
      dfdu[j] = (fns_.f(x, up) - fns_.f(x, um)) / (2.0 * h);
    }
  }
  for (const Mat& a : dfdu)
    if (!all_finite(a)) throw EvaluationFault(x, to_std(u), "non-finite f_u");
}

Mat RDCSystem::g_u(double x, const Vec& u) const {
  guard(x, u);
  Mat out(m_, m_);
  if (mode_ == DerivativeMode::analytic) {
    out = fns_.g_u(x, u);
  } else {
    for (int j = 0; j < m_; ++j) {
      const double h = fd_step(u[j]);
      Vec up = u, um = u;
      up[j] += h;
      um[j] -= h;
      out.col(j) = (fns_.g(x, up) - fns_.g(x, um)) / (2.0 * h);
    }
  }
  if (!all_finite(out)) throw EvaluationFault(x, to_std(u), "non-finite g_u");
  return out;
}

Mat RDCSystem::f_x(double x, const Vec& u) const {
  guard(x, u);
  if (fns_.f_x && mode_ == DerivativeMode::analytic) return fns_.f_x(x, u);
  const double h = fd_step(x);
  return (fns_.f(x + h, u) - fns_.f(x - h, u)) / (2.0 * h);
}

RDCSystem RDCSystem::with_D(const DiffusionMatrix& D) const {
  return RDCSystem(m_, D, fns_, mode_, spec_, r_max_);
}

RDCSystem RDCSystem::with_r_max(double r_max) const {
  return RDCSystem(m_, D_, fns_, mode_, spec_, r_max);
}

SpectralField eval_F(const RDCSystem& sys, const SpectralField& u) {
  if (u.m() != sys.m()) throw SizeMismatch("field component count does not match system");
  const Grid& grid = u.grid();
  const int P = grid.padded_size();
  const NodalArray U = to_nodal_on(u, P);
  const NodalArray UX = to_nodal_on(dx(u), P);
  NodalArray out(sys.m(), P);
  for (int i = 0; i < P; ++i) {
    const double x = static_cast<double>(i) / P;
    const Vec ui = U.col(i);
    const Vec uxi = UX.col(i);
    out.col(i) = sys.f(x, ui) * uxi + sys.g(x, ui);
  }
  return from_padded(grid, out);
}

SpectralField eval_G(const RDCSystem& sys, const SpectralField& u) {
  return eval_F(sys, u) - apply_A(u, sys.D());
}

double derivative_consistency(const RDCSystem& sys, int n_points, double radius, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(-radius, radius);
  std::uniform_real_distribution<double> xx(0.0, 1.0);
  const RDCSystem fd(sys.m(), sys.D(),
                     SystemFunctions{[&sys](double x, const Vec& u) { return sys.f(x, u); },
                                     [&sys](double x, const Vec& u) { return sys.g(x, u); },
                                     {}, {}, {}},
                     DerivativeMode::finite_difference, {}, sys.r_max());
  double worst = 0.0;
  std::vector<Mat> a, b;
  for (int n = 0; n < n_points; ++n) {
    const double x = xx(rng);
    Vec u(sys.m());
    for (int j = 0; j < sys.m(); ++j) u[j] = ux(rng);
    sys.f_u(x, u, a);
    fd.f_u(x, u, b);
    for (int j = 0; j < sys.m(); ++j) {
      const double scale = std::max(1.0, a[j].norm());
      worst = std::max(worst, (a[j] - b[j]).norm() / scale);
    }
    const Mat ga = sys.g_u(x, u);
    const Mat gb = fd.g_u(x, u);
    worst = std::max(worst, (ga - gb).norm() / std::max(1.0, ga.norm()));
  }
  return worst;
}

std::vector<std::string> registry_names() {
  return {"prop51_distinct", "prop51_symmetric", "example53", "example54",
          "prop55", "scalar_burgers", "diag_theorem43", "counterexample_style_noncommuting"};
}

RDCSystem builtin(const std::string& name, const Json& params) {
  const Json p = params.is_null() ? Json::object() : params;
  if (name == "scalar_burgers") return make_scalar_burgers(p);
  if (name == "diag_theorem43") return make_diag_theorem43(p);
  if (name == "prop51_distinct") {
    return make_prop51(
        name, p, mat2(1, 2, 0, 3),
        [](double, const Vec& u) { return 1.0 + 0.25 * u[0] * u[0]; },
        [](double, const Vec& u) {
          Vec g(2);
          g << 0.5 * u[0], 0.0;
          return g;
        },
        [](double, const Vec&) { return 0.0; });
  }
  if (name == "prop51_symmetric") {
    return make_prop51(
        name, p, mat2(1, 0.5, 0.5, -1),
        [](double x, const Vec& u) { return u[0] + 0.5 * std::sin(kTwoPi * x); },
        [](double, const Vec&) {
          Vec g(2);
          g << 1.0, 0.0;
          return g;
        },
        [](double x, const Vec&) { return 0.5 * kTwoPi * std::cos(kTwoPi * x); });
  }
  if (name == "example53") return make_example53(p);
  if (name == "example54") return make_example54(p);
  if (name == "prop55") return make_prop55(p);
  if (name == "counterexample_style_noncommuting") return make_noncommuting(p);
  throw UnknownSystem(name);
}

RDCSystem external_system(const Json& def) {
  const int m = param(def, "m", 0);
  if (m < 1 || m > kMaxComponents) throw ConfigError("external system needs 1 <= m <= 8");
  std::vector<std::pair<Monomial, Mat>> fterms;
  std::vector<std::pair<Monomial, Vec>> gterms;
  for (const Json& t : def.value("f", Json::array()))
    fterms.emplace_back(read_monomial(t, m), read_matrix(t.at("matrix"), m));
  for (const Json& t : def.value("g", Json::array())) {
    const Json& v = t.at("vector");
    if (static_cast<int>(v.size()) != m) throw ConfigError("g vector must have m entries");
    Vec vec(m);
    for (int i = 0; i < m; ++i) vec[i] = v[i].get<double>();
    gterms.emplace_back(read_monomial(t, m), vec);
  }
  SystemFunctions fns;
  fns.f = [m, fterms](double x, const Vec& u) {
    Mat out = Mat::Zero(m, m);
    for (const auto& [mono, M] : fterms) out += mono.phi(x) * mono.value(u) * M;
    return out;
  };
  fns.f_u = [m, fterms](double x, const Vec& u, std::vector<Mat>& dfdu) {
    dfdu.assign(m, Mat::Zero(m, m));
    for (const auto& [mono, M] : fterms)
      for (int j = 0; j < m; ++j) dfdu[j] += mono.phi(x) * mono.partial(u, j) * M;
  };
  fns.f_x = [m, fterms](double x, const Vec& u) {
    Mat out = Mat::Zero(m, m);
    for (const auto& [mono, M] : fterms) out += mono.dphi(x) * mono.value(u) * M;
    return out;
  };
  fns.g = [m, gterms](double x, const Vec& u) {
    Vec out = Vec::Zero(m);
    for (const auto& [mono, v] : gterms) out += mono.phi(x) * mono.value(u) * v;
    return out;
  };
  fns.g_u = [m, gterms](double x, const Vec& u) {
    Mat out = Mat::Zero(m, m);
    for (const auto& [mono, v] : gterms)
      for (int j = 0; j < m; ++j) out.col(j) += mono.phi(x) * mono.partial(u, j) * v;
    return out;
  };
  ExampleSpec spec{param<std::string>(def, "name", "external"), def, std::nullopt, {}, {}};
  return RDCSystem(m, read_diffusion(def, m, Eigen::VectorXd::Constant(m, 0.05)), fns,
                   DerivativeMode::analytic, spec, param(def, "r_max", 10.0));
}

RDCSystem system_from_json(const Json& def) {
  if (def.contains("external")) return external_system(def["external"]);
  if (!def.contains("registry")) throw ConfigError("system needs \"registry\" or \"external\"");
  return builtin(def["registry"].get<std::string>(), def.value("params", Json::object()));
}

}  // namespace rdc
