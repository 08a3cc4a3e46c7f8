#include "rdc/spectral_grid.hpp"

#include "rdc/errors.hpp"

#include <fftw3.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>

namespace rdc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Plans are created once per size under a lock and then executed through the
// new-array interface, which FFTW documents as thread-safe.
struct PlanPair {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  const PlanPair& get(int n) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    std::vector<double> real(static_cast<size_t>(n));
    std::vector<fftw_complex> cplx(static_cast<size_t>(n / 2 + 1));
    PlanPair p;
    p.r2c = fftw_plan_dft_r2c_1d(n, real.data(), cplx.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.c2r = fftw_plan_dft_c2r_1d(n, cplx.data(), real.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
    return plans_.emplace(n, p).first->second;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.r2c);
      fftw_destroy_plan(p.c2r);
    }
  }

  std::mutex mutex_;
  std::map<int, PlanPair> plans_;
};

// Unnormalised r2c of n real samples into n/2+1 complex values.
void r2c(int n, const double* in, std::complex<double>* out) {
  const PlanPair& p = PlanCache::instance().get(n);
  fftw_execute_dft_r2c(p.r2c, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
}

// c2r overwrites its input, so it always works on a private copy.
void c2r(int n, const std::complex<double>* in, double* out) {
  const PlanPair& p = PlanCache::instance().get(n);
  std::vector<std::complex<double>> scratch(in, in + n / 2 + 1);
  fftw_execute_dft_c2r(p.c2r, reinterpret_cast<fftw_complex*>(scratch.data()), out);
}

// Copies a half spectrum of a size-n_in signal into the half spectrum of a
// size-n_out signal, splitting or dropping the Nyquist mode as needed.
Eigen::VectorXcd resize_spectrum(const Eigen::VectorXcd& in, int n_in, int n_out) {
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n_out / 2 + 1);
  const int nyq_in = n_in / 2;
  const int nyq_out = n_out / 2;
  const int kmax = std::min(nyq_in, nyq_out);
  for (int k = 0; k <= kmax; ++k) out[k] = in[k];
  if (n_out > n_in) {
    // The input Nyquist term is a cosine; split it evenly between +-N/2.
    out[nyq_in] = 0.5 * in[nyq_in].real();
  } else if (n_out < n_in) {
    out[nyq_out] = 0.0;
  }
  return out;
}

void write_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
  os.write(reinterpret_cast<const char*>(b), 4);
}

void write_f64(std::ostream& os, double v) {
  const auto bits = std::bit_cast<uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xffu);
  os.write(reinterpret_cast<const char*>(b), 8);
}

uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw IoError("truncated snapshot header");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

double read_f64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw IoError("truncated snapshot data");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

}  // namespace

Grid::Grid(int n_points, int dealias_num, int dealias_den)
    : n_(n_points), num_(dealias_num), den_(dealias_den) {
  if (n_ < 8 || n_ % 2 != 0)
    throw ConfigError("grid size must be an even integer >= 8, got " + std::to_string(n_));
  if (num_ <= 0 || den_ <= 0 || num_ > den_)
    throw ConfigError("dealias fraction must lie in (0, 1]");
  // ceil(N * den / num), rounded up to even
  padded_ = (n_ * den_ + num_ - 1) / num_;
  if (padded_ % 2 != 0) ++padded_;
}

int Grid::dealias_cutoff() const { return (n_ * num_) / (2 * den_); }

DiffusionMatrix::DiffusionMatrix(Eigen::VectorXd d) : d_(std::move(d)) {
  if (d_.size() == 0 || d_.size() > kMaxComponents)
    throw ConfigError("diffusion vector must have 1.." + std::to_string(kMaxComponents) +
                      " entries");
  for (int j = 0; j < d_.size(); ++j)
    if (!(d_[j] > 0.0) || !std::isfinite(d_[j]))
      throw ConfigError("diffusion coefficients must be positive");
}

DiffusionMatrix DiffusionMatrix::scalar(int m, double d) {
  return DiffusionMatrix(Eigen::VectorXd::Constant(m, d));
}

bool DiffusionMatrix::is_scalar() const {
  for (int j = 1; j < d_.size(); ++j)
    if (d_[j] != d_[0]) return false;
  return true;
}

Mat DiffusionMatrix::matrix() const {
  Mat out = Mat::Zero(m(), m());
  for (int j = 0; j < m(); ++j) out(j, j) = d_[j];
  return out;
}

Mat DiffusionMatrix::inverse() const {
  Mat out = Mat::Zero(m(), m());
  for (int j = 0; j < m(); ++j) out(j, j) = 1.0 / d_[j];
  return out;
}

SpectralField::SpectralField(const Grid& grid, int m)
    : grid_(grid), coeffs_(Eigen::MatrixXcd::Zero(m, grid.n_modes())) {}

SpectralField::SpectralField(const Grid& grid, Eigen::MatrixXcd coeffs)
    : grid_(grid), coeffs_(std::move(coeffs)) {
  if (coeffs_.cols() != grid_.n_modes())
    throw SizeMismatch("coefficient array has " + std::to_string(coeffs_.cols()) +
                       " modes, grid expects " + std::to_string(grid_.n_modes()));
}

std::complex<double> SpectralField::coeff(int j, int k) const {
  if (k >= 0) return coeffs_(j, k);
  return std::conj(coeffs_(j, -k));
}

void SpectralField::check_compatible(const SpectralField& other) const {
  if (!(grid_ == other.grid_) || m() != other.m())
    throw SizeMismatch("fields live on different grids or component counts");
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
  check_compatible(other);
  coeffs_ += other.coeffs_;
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
  check_compatible(other);
  coeffs_ -= other.coeffs_;
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  coeffs_ *= s;
  return *this;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double s, SpectralField a) { return a *= s; }

Eigen::VectorXcd forward_real(const Eigen::VectorXd& values) {
  const int n = static_cast<int>(values.size());
  Eigen::VectorXcd out(n / 2 + 1);
  r2c(n, values.data(), out.data());
  out /= static_cast<double>(n);
  return out;
}

Eigen::VectorXd inverse_real(const Eigen::VectorXcd& half_spectrum, int n_out) {
  const int n_in = 2 * (static_cast<int>(half_spectrum.size()) - 1);
  Eigen::VectorXcd spec =
      n_in == n_out ? half_spectrum : resize_spectrum(half_spectrum, n_in, n_out);
  Eigen::VectorXd out(n_out);
  c2r(n_out, spec.data(), out.data());
  return out;
}

NodalArray to_nodal(const SpectralField& field) { return to_nodal_on(field, field.grid().size()); }

NodalArray to_nodal_on(const SpectralField& field, int n_out) {
  NodalArray out(field.m(), n_out);
  for (int j = 0; j < field.m(); ++j)
    out.row(j) = inverse_real(field.coeffs().row(j).transpose(), n_out).transpose();
  return out;
}

SpectralField to_spectral(const Grid& grid, const NodalArray& nodal) {
  if (nodal.cols() != grid.size())
    throw SizeMismatch("nodal array has " + std::to_string(nodal.cols()) + " columns, grid has " +
                       std::to_string(grid.size()) + " points");
  SpectralField out(grid, static_cast<int>(nodal.rows()));
  for (int j = 0; j < nodal.rows(); ++j)
    out.coeffs().row(j) = forward_real(nodal.row(j).transpose()).transpose();
  return out;
}

SpectralField from_padded(const Grid& grid, const NodalArray& padded) {
  const int n_fine = static_cast<int>(padded.cols());
  SpectralField out(grid, static_cast<int>(padded.rows()));
  for (int j = 0; j < padded.rows(); ++j) {
    Eigen::VectorXcd fine = forward_real(padded.row(j).transpose());
    for (int k = 0; k < grid.nyquist() && k < n_fine / 2; ++k) out.coeffs()(j, k) = fine[k];
  }
  return out;
}

double symbol_A(double d, int k) {
  const double w = kTwoPi * k;
  return 1.0 + d * w * w;
}

SpectralField apply_A(const SpectralField& u, const DiffusionMatrix& D) {
  if (D.m() != u.m()) throw SizeMismatch("diffusion matrix size does not match field");
  SpectralField out = u;
  for (int j = 0; j < u.m(); ++j)
    for (int k = 0; k < u.grid().n_modes(); ++k) out.coeffs()(j, k) *= symbol_A(D[j], k);
  return out;
}

double sobolev_norm(const SpectralField& u, double alpha, const DiffusionMatrix& D) {
  if (alpha < 0.0) throw PreconditionError("sobolev_norm requires alpha >= 0");
  if (D.m() != u.m()) throw SizeMismatch("diffusion matrix size does not match field");
  const int nyq = u.grid().nyquist();
  double sum = 0.0;
  for (int j = 0; j < u.m(); ++j) {
    for (int k = 0; k <= nyq; ++k) {
      const double weight = (k == 0 || k == nyq) ? 1.0 : 2.0;
      const double s = alpha == 0.0 ? 1.0 : std::pow(symbol_A(D[j], k), alpha);
      sum += weight * std::norm(s * u.coeffs()(j, k));
    }
  }
  return std::sqrt(sum);
}

SpectralField project_low_modes(const SpectralField& u, int n_keep) {
  if (n_keep < 0 || n_keep > u.grid().nyquist())
    throw PreconditionError("project_low_modes requires 0 <= n_keep <= N/2");
  SpectralField out = u;
  out.coeffs().rightCols(u.grid().nyquist() - n_keep).setZero();
  return out;
}

SpectralField truncate_dealias(const SpectralField& u) {
  return project_low_modes(u, u.grid().dealias_cutoff());
}

SpectralField dx(const SpectralField& u) {
  SpectralField out = u;
  const int nyq = u.grid().nyquist();
  for (int k = 0; k <= nyq; ++k) {
    const std::complex<double> factor =
        k == nyq ? std::complex<double>(0.0) : std::complex<double>(0.0, kTwoPi * k);
    out.coeffs().col(k) *= factor;
  }
  return out;
}

SpectralField dxx(const SpectralField& u) {
  SpectralField out = u;
  for (int k = 0; k <= u.grid().nyquist(); ++k) {
    const double w = kTwoPi * k;
    out.coeffs().col(k) *= -w * w;
  }
  return out;
}

double evaluate_at(const SpectralField& u, int j, double x) {
  const int nyq = u.grid().nyquist();
  double value = u.coeffs()(j, 0).real();
  for (int k = 1; k < nyq; ++k) {
    const std::complex<double> e = std::polar(1.0, kTwoPi * k * x);
    value += 2.0 * (u.coeffs()(j, k) * e).real();
  }
  value += u.coeffs()(j, nyq).real() * std::cos(kTwoPi * nyq * x);
  return value;
}

SpectralField random_field(const Grid& grid, int m, std::mt19937_64& rng, double decay,
                           int max_mode) {
  std::normal_distribution<double> normal(0.0, 1.0);
  SpectralField out(grid, m);
  const int kmax = std::min(max_mode, grid.nyquist() - 1);
  for (int j = 0; j < m; ++j) {
    out.coeffs()(j, 0) = normal(rng);
    for (int k = 1; k <= kmax; ++k) {
      const double scale = std::exp(-static_cast<double>(k) / decay);
      const double re = normal(rng);
      const double im = normal(rng);
      out.coeffs()(j, k) = 0.5 * scale * std::complex<double>(re, im);
    }
  }
  return out;
}

void write_snapshot(const std::filesystem::path& path, const SpectralField& field, double alpha,
                    const DiffusionMatrix& D) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open snapshot for writing: " + path.string());
  const NodalArray nodal = to_nodal(field);
  write_u32(os, static_cast<uint32_t>(field.m()));
  write_u32(os, static_cast<uint32_t>(field.grid().size()));
  write_f64(os, alpha);
  for (int j = 0; j < D.m(); ++j) write_f64(os, D[j]);
  for (int j = 0; j < nodal.rows(); ++j)
    for (int i = 0; i < nodal.cols(); ++i) write_f64(os, nodal(j, i));
  if (!os) throw IoError("failed writing snapshot: " + path.string());
}

Snapshot read_snapshot(const std::filesystem::path& path, int dealias_num, int dealias_den) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open snapshot: " + path.string());
  const int m = static_cast<int>(read_u32(is));
  const int n = static_cast<int>(read_u32(is));
  if (m <= 0 || m > kMaxComponents) throw IoError("bad component count in " + path.string());
  const double alpha = read_f64(is);
  Eigen::VectorXd d(m);
  for (int j = 0; j < m; ++j) d[j] = read_f64(is);
  NodalArray nodal(m, n);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) nodal(j, i) = read_f64(is);
  Grid grid(n, dealias_num, dealias_den);
  return Snapshot{to_spectral(grid, nodal), alpha, DiffusionMatrix(d)};
}

}  // namespace rdc
