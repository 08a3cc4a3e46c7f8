#include "rdc/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace rdc {

Mat expm(const Mat& a) {
  Eigen::MatrixXd dense = a;
  Eigen::MatrixXd out = dense.exp();
  return out;
}

}  // namespace rdc
