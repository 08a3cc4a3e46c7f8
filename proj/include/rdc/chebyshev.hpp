#pragma once

#include <Eigen/Dense>

#include <vector>

namespace rdc {

using MatLD = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VecLD = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

/// Chebyshev-Gauss-Lobatto collocation on [0,1] with n+1 nodes in ascending
/// order, x_0 = 0 and x_n = 1. Differentiation is carried out in long double.
class ChebyshevGrid {
 public:
  explicit ChebyshevGrid(int n);

  int n() const { return n_; }
  int size() const { return n_ + 1; }
  const std::vector<double>& nodes() const { return nodes_; }
  double x(int j) const { return nodes_[j]; }
  const MatLD& d1() const { return d1_; }
  const MatLD& d2() const { return d2_; }

  /// Derivatives of nodal values; each column of f is one signal.
  Eigen::MatrixXd diff(const Eigen::MatrixXd& f, int order) const;
  Eigen::MatrixXcd diff(const Eigen::MatrixXcd& f, int order) const;

 private:
  int n_;
  std::vector<double> nodes_;
  MatLD d1_, d2_;
};

}  // namespace rdc
