#include "rdc/chebyshev.hpp"

#include "rdc/errors.hpp"

#include <cmath>

namespace rdc {

ChebyshevGrid::ChebyshevGrid(int n) : n_(n) {
  if (n < 2) throw PreconditionError("Chebyshev grid needs n >= 2");
  const long double pi = 3.141592653589793238462643383279502884L;
  // t_j = cos(pi j / n) descends from 1 to -1; x = (1 - t) / 2 ascends.
  VecLD t(n + 1);
  for (int j = 0; j <= n; ++j) t[j] = std::cos(pi * j / n);
  nodes_.resize(n + 1);
  for (int j = 0; j <= n; ++j) nodes_[j] = static_cast<double>((1.0L - t[j]) / 2.0L);
  VecLD c(n + 1);
  for (int j = 0; j <= n; ++j) c[j] = ((j == 0 || j == n) ? 2.0L : 1.0L) * ((j % 2) ? -1.0L : 1.0L);
  MatLD D = MatLD::Zero(n + 1, n + 1);
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j)
      if (i != j) D(i, j) = (c[i] / c[j]) / (t[i] - t[j]);
  for (int i = 0; i <= n; ++i) D(i, i) = -D.row(i).sum();
  // d/dx = -2 d/dt
  d1_ = -2.0L * D;
  d2_ = d1_ * d1_;
}

Eigen::MatrixXd ChebyshevGrid::diff(const Eigen::MatrixXd& f, int order) const {
  if (f.rows() != size()) throw SizeMismatch("nodal values do not match Chebyshev grid");
  const MatLD& D = order == 1 ? d1_ : d2_;
  if (order != 1 && order != 2) throw PreconditionError("only first and second derivatives");
  return (D * f.cast<long double>()).cast<double>();
}

Eigen::MatrixXcd ChebyshevGrid::diff(const Eigen::MatrixXcd& f, int order) const {
  Eigen::MatrixXcd out(f.rows(), f.cols());
  out.real() = diff(Eigen::MatrixXd(f.real()), order);
  out.imag() = diff(Eigen::MatrixXd(f.imag()), order);
  return out;
}

}  // namespace rdc
