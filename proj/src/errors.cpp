#include "rdc/errors.hpp"

#include <sstream>

namespace rdc {

namespace {

std::string describe_point(double x, const std::vector<double>& u, const std::string& reason) {
  std::ostringstream os;
  os << "evaluation fault at x=" << x << ", u=(";
  for (size_t i = 0; i < u.size(); ++i) os << (i ? ", " : "") << u[i];
  os << "): " << reason;
  return os.str();
}

}  // namespace

EvaluationFault::EvaluationFault(double x, std::vector<double> u, const std::string& reason)
    : Error(describe_point(x, u, reason)), x_(x), u_(std::move(u)) {}

DivergenceFault::DivergenceFault(double t, double max_norm)
    : Error("trajectory diverged at t=" + std::to_string(t) +
            " (max norm " + std::to_string(max_norm) + ")"),
      t_(t),
      max_norm_(max_norm) {}

}  // namespace rdc
