#pragma once

#include "rdc/rdc_model.hpp"

#include <functional>

namespace rdc::testing {

// Polynomial-free helper: builds a system from plain callables with
// analytic derivatives supplied by the caller.
inline RDCSystem make_system(int m, const DiffusionMatrix& D,
                             std::function<Mat(double, const Vec&)> f,
                             std::function<Vec(double, const Vec&)> g,
                             std::function<void(double, const Vec&, std::vector<Mat>&)> f_u,
                             std::function<Mat(double, const Vec&)> g_u, double r_max = 10.0) {
  SystemFunctions fns;
  fns.f = std::move(f);
  fns.g = std::move(g);
  fns.f_u = std::move(f_u);
  fns.g_u = std::move(g_u);
  return RDCSystem(m, D, fns, DerivativeMode::analytic, ExampleSpec{"test", {}, {}, {}, {}},
                   r_max);
}

inline RDCSystem zero_system(int m, double d) {
  return make_system(
      m, DiffusionMatrix::scalar(m, d), [m](double, const Vec&) { return Mat::Zero(m, m).eval(); },
      [m](double, const Vec&) { return Vec::Zero(m).eval(); },
      [m](double, const Vec&, std::vector<Mat>& a) { a.assign(m, Mat::Zero(m, m)); },
      [m](double, const Vec&) { return Mat::Zero(m, m).eval(); });
}

// m = 1, f = a + b u + c u^2, g = r u + s u^3.
inline RDCSystem scalar_poly(double d, double a, double b, double c, double r, double s,
                             double r_max = 10.0) {
  return make_system(
      1, DiffusionMatrix::scalar(1, d),
      [=](double, const Vec& u) { return Mat::Constant(1, 1, a + b * u[0] + c * u[0] * u[0]); },
      [=](double, const Vec& u) { return Vec::Constant(1, r * u[0] + s * u[0] * u[0] * u[0]); },
      [=](double, const Vec& u, std::vector<Mat>& out) {
        out.assign(1, Mat::Constant(1, 1, b + 2.0 * c * u[0]));
      },
      [=](double, const Vec& u) { return Mat::Constant(1, 1, r + 3.0 * s * u[0] * u[0]); }, r_max);
}

}  // namespace rdc::testing
