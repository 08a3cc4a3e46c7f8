#include "rdc/linearization.hpp"

#include "rdc/errors.hpp"

#include <boost/math/special_functions/legendre.hpp>

#include <cmath>
#include <fstream>
#include <numbers>

namespace rdc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_pair(const RDCSystem& sys, const SpectralField& u, const SpectralField& v) {
  if (!(u.grid() == v.grid()) || u.m() != v.m() || u.m() != sys.m())
    throw SizeMismatch("pair fields must share grid and component count with the system");
}

Eigen::VectorXd entry_series(const MatrixCurve& M, int r, int c) {
  Eigen::VectorXd s(M.n_nodes());
  for (int i = 0; i < M.n_nodes(); ++i) s[i] = M.values[i](r, c);
  return s;
}

MatrixCurve empty_like(const MatrixCurve& M, int n, const std::string& kind) {
  MatrixCurve out;
  out.kind = kind;
  out.m = M.m;
  out.periodic = true;
  out.values.assign(n, Mat::Zero(M.m, M.m));
  return out;
}

void require_periodic(const MatrixCurve& M) {
  if (!M.periodic) throw PreconditionError("operation needs a periodic matrix curve");
}

}  // namespace

Quadrature gauss_legendre_01(int n) {
  if (n < 1) throw PreconditionError("quadrature needs at least one node");
  const std::vector<double> zeros = boost::math::legendre_p_zeros<double>(n);
  std::vector<double> nodes;
  for (double z : zeros) {
    nodes.push_back(z);
    if (z != 0.0) nodes.push_back(-z);
  }
  std::sort(nodes.begin(), nodes.end());
  Quadrature q;
  for (double z : nodes) {
    const double dp = boost::math::legendre_p_prime(n, z);
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    q.nodes.push_back(0.5 * (z + 1.0));
    q.weights.push_back(0.5 * w);
  }
  return q;
}

MatrixCurve build_B(const RDCSystem& sys, const SpectralField& u, const SpectralField& v,
                    int n_quad) {
  check_pair(sys, u, v);
  const Quadrature q = gauss_legendre_01(n_quad);
  const NodalArray U = to_nodal(u);
  const NodalArray V = to_nodal(v);
  const int N = u.grid().size();
  const int m = sys.m();
  MatrixCurve B;
  B.kind = "B";
  B.m = m;
  B.values.assign(N, Mat::Zero(m, m));
  for (int i = 0; i < N; ++i) {
    const double x = u.grid().x(i);
    const Vec ui = U.col(i), vi = V.col(i);
    for (size_t s = 0; s < q.nodes.size(); ++s) {
      const double t = q.nodes[s];
      const Vec w = t * ui + (1.0 - t) * vi;
      B.values[i] += q.weights[s] * sys.f(x, w);
    }
  }
  return B;
}

MatrixCurve build_B0(const RDCSystem& sys, const SpectralField& u, const SpectralField& v,
                     int n_quad) {
  check_pair(sys, u, v);
  const Quadrature q = gauss_legendre_01(n_quad);
  const NodalArray U = to_nodal(u), V = to_nodal(v);
  const NodalArray UX = to_nodal(dx(u)), VX = to_nodal(dx(v));
  const int N = u.grid().size();
  const int m = sys.m();
  MatrixCurve B0;
  B0.kind = "B0";
  B0.m = m;
  B0.values.assign(N, -identity(m));
  std::vector<Mat> dfdu;
  for (int i = 0; i < N; ++i) {
    const double x = u.grid().x(i);
    const Vec ui = U.col(i), vi = V.col(i), uxi = UX.col(i), vxi = VX.col(i);
    for (size_t s = 0; s < q.nodes.size(); ++s) {
      const double t = q.nodes[s];
      const Vec w = t * ui + (1.0 - t) * vi;
      const Vec wx = t * uxi + (1.0 - t) * vxi;
      sys.f_u(x, w, dfdu);
      Mat term = sys.g_u(x, w);
      for (int j = 0; j < m; ++j) term.col(j) += dfdu[j] * wx;
      B0.values[i] += q.weights[s] * term;
    }
  }
  return B0;
}

MatrixCurve curve_dx(const MatrixCurve& M) {
  require_periodic(M);
  const int N = M.n_nodes();
  MatrixCurve out = empty_like(M, N, M.kind + "_x");
  for (int r = 0; r < M.m; ++r) {
    for (int c = 0; c < M.m; ++c) {
      Eigen::VectorXcd spec = forward_real(entry_series(M, r, c));
      for (int k = 0; k < spec.size(); ++k)
        spec[k] *= (k == N / 2) ? std::complex<double>(0.0) : std::complex<double>(0.0, kTwoPi * k);
      const Eigen::VectorXd d = inverse_real(spec, N);
      for (int i = 0; i < N; ++i) out.values[i](r, c) = d[i];
    }
  }
  return out;
}

MatrixCurve build_Q(const MatrixCurve& B0, const MatrixCurve& B, const DiffusionMatrix& D) {
  if (B0.n_nodes() != B.n_nodes() || B0.m != B.m || D.m() != B.m)
    throw SizeMismatch("B0, B and D must agree in size");
  const MatrixCurve Bx = curve_dx(B);
  const Mat Dinv = D.inverse();
  MatrixCurve Q = empty_like(B, B.n_nodes(), "Q");
  for (int i = 0; i < B.n_nodes(); ++i)
    Q.values[i] = B0.values[i] - 0.5 * Bx.values[i] - 0.25 * B.values[i] * Dinv * B.values[i];
  return Q;
}

Linearization linearize(const RDCSystem& sys, const SpectralField& u, const SpectralField& v,
                        int n_quad, bool check_doubling) {
  Linearization lin;
  lin.B = build_B(sys, u, v, n_quad);
  lin.B0 = build_B0(sys, u, v, n_quad);
  lin.Q = build_Q(lin.B0, lin.B, sys.D());
  if (check_doubling) {
    const MatrixCurve B2 = build_B(sys, u, v, 2 * n_quad);
    const MatrixCurve B02 = build_B0(sys, u, v, 2 * n_quad);
    double change = 0.0;
    for (int i = 0; i < lin.B.n_nodes(); ++i) {
      change = std::max(change, (B2.values[i] - lin.B.values[i]).cwiseAbs().maxCoeff());
      change = std::max(change, (B02.values[i] - lin.B0.values[i]).cwiseAbs().maxCoeff());
    }
    lin.quadrature_change = change;
    lin.quadrature_flag = change >= 1e-10;
  }
  return lin;
}

MatrixCurve resample_periodic(const MatrixCurve& M, int n_out) {
  require_periodic(M);
  MatrixCurve out = empty_like(M, n_out, M.kind);
  for (int r = 0; r < M.m; ++r) {
    for (int c = 0; c < M.m; ++c) {
      const Eigen::VectorXd fine = inverse_real(forward_real(entry_series(M, r, c)), n_out);
      for (int i = 0; i < n_out; ++i) out.values[i](r, c) = fine[i];
    }
  }
  return out;
}

Mat evaluate_curve(const MatrixCurve& M, double x) { return CurveInterpolant(M)(x); }

CurveInterpolant::CurveInterpolant(const MatrixCurve& M) : m_(M.m), n_(M.n_nodes()) {
  require_periodic(M);
  spectra_.reserve(m_ * m_);
  for (int r = 0; r < m_; ++r)
    for (int c = 0; c < m_; ++c) spectra_.push_back(forward_real(entry_series(M, r, c)));
}

Mat CurveInterpolant::operator()(double x) const {
  const int half = n_ / 2;
  Eigen::VectorXcd phase(half);
  for (int k = 1; k < half; ++k) phase[k] = std::polar(2.0, kTwoPi * k * x);
  const double nyq = std::cos(kTwoPi * half * x);
  Mat out(m_, m_);
  for (int r = 0; r < m_; ++r) {
    for (int c = 0; c < m_; ++c) {
      const Eigen::VectorXcd& s = spectra_[r * m_ + c];
      double value = s[0].real() + s[half].real() * nyq;
      for (int k = 1; k < half; ++k) value += (s[k] * phase[k]).real();
      out(r, c) = value;
    }
  }
  return out;
}

SpectralField apply_curve(const MatrixCurve& M, const SpectralField& h) {
  require_periodic(M);
  if (M.n_nodes() != h.grid().size() || M.m != h.m())
    throw SizeMismatch("matrix curve and field live on different grids");
  const int P = h.grid().padded_size();
  const MatrixCurve Mp = resample_periodic(M, P);
  const NodalArray H = to_nodal_on(h, P);
  NodalArray out(h.m(), P);
  for (int i = 0; i < P; ++i) out.col(i) = Mp.values[i] * H.col(i);
  return from_padded(h.grid(), out);
}

SpectralField apply_T0(const MatrixCurve& Q, double omega, const SpectralField& h) {
  return omega * h + apply_curve(Q, h);
}

SpectralField apply_R(const DiffusionMatrix& D, const MatrixCurve& B0, const MatrixCurve& B,
                      const SpectralField& h) {
  if (D.m() != h.m()) throw SizeMismatch("diffusion matrix does not match field");
  // The -E part of B0 is applied spectrally together with D h_xx so the
  // linear terms match -A h mode by mode, Nyquist included.
  SpectralField out = -1.0 * apply_A(h, D);
  MatrixCurve shifted = B0;
  for (Mat& a : shifted.values) a += identity(B0.m);
  out += apply_curve(shifted, h);
  out += apply_curve(B, dx(h));
  return out;
}

void write_curve(const std::filesystem::path& path, const MatrixCurve& M) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open curve dump " + path.string());
  const uint32_t header[2] = {static_cast<uint32_t>(M.m), static_cast<uint32_t>(M.n_nodes())};
  os.write(reinterpret_cast<const char*>(header), sizeof(header));
  for (const Mat& a : M.values)
    for (int r = 0; r < M.m; ++r)
      for (int c = 0; c < M.m; ++c) {
        const double v = a(r, c);
        os.write(reinterpret_cast<const char*>(&v), sizeof(v));
      }
}

}  // namespace rdc
