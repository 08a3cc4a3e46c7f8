#pragma once

#include "rdc/linalg.hpp"
#include "rdc/spectral_grid.hpp"

#include <json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rdc {

using Json = nlohmann::json;

enum class DerivativeMode { analytic, finite_difference };

/// Pointwise problem data. f_u fills dfdu[j] = df/du_j (an m x m matrix per j).
struct SystemFunctions {
  std::function<Mat(double x, const Vec& u)> f;
  std::function<Vec(double x, const Vec& u)> g;
  std::function<void(double x, const Vec& u, std::vector<Mat>& dfdu)> f_u;
  std::function<Mat(double x, const Vec& u)> g_u;
  std::function<Mat(double x, const Vec& u)> f_x;
};

/// Structural data a registry entry was built from, kept so the certifier can
/// check the defining property directly.
struct ExampleSpec {
  std::string name;
  Json params = Json::object();
  /// Constant matrix Q of f = f1(x,u) Q.
  std::optional<Mat> Q;
  std::function<double(double x, const Vec& u)> f1;
  /// x-only convection matrix Q(x).
  std::function<Mat(double x)> Q_of_x;
};

/// Semilinear system u_t = D u_xx - u + f(x,u) u_x + g(x,u) on the circle.
class RDCSystem {
 public:
  RDCSystem(int m, DiffusionMatrix D, SystemFunctions fns, DerivativeMode mode,
            ExampleSpec spec = {}, double r_max = 10.0);

  int m() const { return m_; }
  const DiffusionMatrix& D() const { return D_; }
  DerivativeMode derivative_mode() const { return mode_; }
  const ExampleSpec& spec() const { return spec_; }
  double r_max() const { return r_max_; }
  const std::string& name() const { return spec_.name; }

  /// Evaluations with the state-box guard and finiteness check.
  Mat f(double x, const Vec& u) const;
  Vec g(double x, const Vec& u) const;
  void f_u(double x, const Vec& u, std::vector<Mat>& dfdu) const;
  Mat g_u(double x, const Vec& u) const;
  Mat f_x(double x, const Vec& u) const;

  /// Same system with a different diffusion matrix or state box.
  RDCSystem with_D(const DiffusionMatrix& D) const;
  RDCSystem with_r_max(double r_max) const;

 private:
  void guard(double x, const Vec& u) const;

  int m_;
  DiffusionMatrix D_;
  SystemFunctions fns_;
  DerivativeMode mode_;
  ExampleSpec spec_;
  double r_max_;
};

/// f(x,u) u_x + g(x,u), products formed on the padded grid.
SpectralField eval_F(const RDCSystem& sys, const SpectralField& u);
/// eval_F(u) - A u.
SpectralField eval_G(const RDCSystem& sys, const SpectralField& u);

/// Largest relative mismatch between the analytic f_u, g_u and central
/// differences over n_points random states in the box |u_i| <= radius.
double derivative_consistency(const RDCSystem& sys, int n_points, double radius, uint64_t seed);

std::vector<std::string> registry_names();
/// Registry system by name. Recognised params depend on the entry; "d" (array)
/// overrides the default diffusion vector and "r_max" the state box.
RDCSystem builtin(const std::string& name, const Json& params = Json::object());

/// Polynomial system from coefficient tables:
/// {"m": 2, "d": [..], "f": [term...], "g": [term...]} where each term is
/// {"coef": c, "powers": [p_1..p_m], "phi": {"kind": "cos"|"sin"|"one", "k": n},
///  "matrix": [[..]]} for f and "vector": [..] for g.
RDCSystem external_system(const Json& def);

/// Dispatches on {"registry": name, "params": {...}} or {"external": {...}}.
RDCSystem system_from_json(const Json& def);

}  // namespace rdc
