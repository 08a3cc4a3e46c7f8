#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace rdc {

/// Upper bound on the component count m. Small-matrix types below use inline
/// storage of this size so pointwise evaluations never touch the heap.
inline constexpr int kMaxComponents = 8;

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor,
                          kMaxComponents, kMaxComponents>;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxComponents, 1>;
using CMat = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic,
                           Eigen::ColMajor, kMaxComponents, kMaxComponents>;
using CVec = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, 1, Eigen::ColMajor,
                           kMaxComponents, 1>;

inline Mat identity(int m) { return Mat::Identity(m, m); }

inline Mat commutator(const Mat& a, const Mat& b) { return a * b - b * a; }

inline double max_offdiag(const Mat& a) {
  double worst = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (i != j) worst = std::max(worst, std::abs(a(i, j)));
  return worst;
}

inline double asymmetry(const Mat& a) { return (a - a.transpose()).norm(); }

/// Eigenvalues of a general real matrix.
inline CVec eigenvalues(const Mat& a) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(a), false);
  return es.eigenvalues();
}

/// Smallest eigenvalue of the symmetric part (a + a^t)/2.
inline double min_sym_eigenvalue(const Mat& a) {
  Eigen::MatrixXd s = 0.5 * (Eigen::MatrixXd(a) + Eigen::MatrixXd(a).transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Matrix exponential (Pade scaling and squaring from Eigen's MatrixFunctions).
Mat expm(const Mat& a);

}  // namespace rdc
