#include "texplore/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>

namespace texplore {

std::int64_t grid_bin(double omega, std::int64_t T) {
  if (T < 1) throw GridError("frequency grid: T must be >= 1");
  if (!std::isfinite(omega) || omega < 0.0 || omega >= 1.0) throw GridError("frequency must lie in [0, 1)");
  const double scaled = omega * static_cast<double>(T);
  const double k = std::round(scaled);
  const double tol = 1e-6 + 8.0 * std::numeric_limits<double>::epsilon() * std::abs(scaled);
  if (std::abs(scaled - k) > tol) throw GridError("frequency " + std::to_string(omega) + " is not on the grid of T");
  const auto bin = static_cast<std::int64_t>(k);
  if (bin >= T) throw GridError("frequency rounds to 1, outside [0, 1)");
  return bin;
}

Complex grid_phasor(std::int64_t bin, std::int64_t n, std::int64_t T) {
  const auto r = static_cast<std::int64_t>((static_cast<__int128>(bin % T) * static_cast<__int128>(n % T)) % T);
  const double angle = -2.0 * kPi * static_cast<double>(r) / static_cast<double>(T);
  return {std::cos(angle), std::sin(angle)};
}

FrequencyGrid::FrequencyGrid(std::int64_t T, const std::vector<double>& freqs) : T_(T) {
  if (T < 1) throw GridError("frequency grid: T must be >= 1");
  if (freqs.empty()) throw GridError("frequency grid: at least one frequency required");
  if (static_cast<std::int64_t>(freqs.size()) > T) throw GridError("frequency grid: L must not exceed T");
  std::set<std::int64_t> seen;
  for (double w : freqs) {
    const std::int64_t k = grid_bin(w, T);
    if (seen.count(k)) throw GridError("frequency grid: duplicate frequency");
    if (k != 0 && seen.count(T - k)) throw GridError("frequency grid: omega and 1 - omega both present");
    seen.insert(k);
    bins_.push_back(k);
  }
}

std::vector<double> FrequencyGrid::omegas() const {
  std::vector<double> out;
  out.reserve(bins_.size());
  for (int i = 0; i < L(); ++i) out.push_back(omega(i));
  return out;
}

InputSpectrum::InputSpectrum(FrequencyGrid grid_, Matrix amplitudes_)
    : grid(std::move(grid_)), amplitudes(std::move(amplitudes_)) {
  if (amplitudes.cols() != grid.L() || amplitudes.rows() < 1)
    throw DimensionError("InputSpectrum: amplitudes must be n_u x L");
  if (!amplitudes.allFinite()) throw DataError("InputSpectrum: non-finite amplitude");
}

Matrix InputSpectrum::Ue() const {
  const int n = nu();
  Matrix U = Matrix::Zero(static_cast<Eigen::Index>(L()) * n, L());
  for (int i = 0; i < L(); ++i) U.block(static_cast<Eigen::Index>(i) * n, i, n, 1) = amplitudes.col(i);
  return U;
}

Vector InputSpectrum::stacked() const { return Eigen::Map<const Vector>(amplitudes.data(), amplitudes.size()); }

InputSpectrum spectrum_from_stacked(const FrequencyGrid& grid, const Vector& stacked, int nu) {
  if (nu < 1 || stacked.size() != static_cast<Eigen::Index>(grid.L()) * nu)
    throw DimensionError("spectrum_from_stacked: length must be L * n_u");
  return InputSpectrum(grid, Eigen::Map<const Matrix>(stacked.data(), nu, grid.L()));
}

CVector spectral_amplitude_bin(const Matrix& seq, std::int64_t bin) {
  const std::int64_t T = seq.rows();
  if (T < 1) throw DimensionError("spectral_amplitude: empty sequence");
  CVector acc = CVector::Zero(seq.cols());
  for (std::int64_t k = 0; k < T; ++k) acc += grid_phasor(bin, k, T) * seq.row(k).transpose().cast<Complex>();
  return acc / static_cast<double>(T);
}

CVector spectral_amplitude(const Matrix& seq, double omega) {
  return spectral_amplitude_bin(seq, grid_bin(omega, seq.rows()));
}

CMatrix full_spectrum(const Matrix& seq) {
  const Eigen::Index T = seq.rows();
  const Eigen::Index d = seq.cols();
  if (T < 1) throw DimensionError("full_spectrum: empty sequence");
  if (T > std::numeric_limits<int>::max()) throw ResourceError("full_spectrum: sequence too long");
  CMatrix out(T, d);
  const Eigen::Index half = T / 2 + 1;
  double* in = fftw_alloc_real(static_cast<std::size_t>(T));
  fftw_complex* spec = fftw_alloc_complex(static_cast<std::size_t>(half));
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(T), in, spec, FFTW_ESTIMATE);
  for (Eigen::Index c = 0; c < d; ++c) {
    for (Eigen::Index k = 0; k < T; ++k) in[k] = seq(k, c);
    fftw_execute(plan);
    for (Eigen::Index m = 0; m < half; ++m) {
      const Complex v(spec[m][0] / static_cast<double>(T), spec[m][1] / static_cast<double>(T));
      out(m, c) = v;
      if (m != 0 && T - m != m) out(T - m, c) = std::conj(v);
    }
  }
  fftw_destroy_plan(plan);
  fftw_free(spec);
  fftw_free(in);
  return out;
}

Matrix synth_multisine(const InputSpectrum& spec) {
  const std::int64_t T = spec.grid.T();
  if (T > std::numeric_limits<int>::max()) throw ResourceError("synth_multisine: T too large to materialize");
  Matrix U = Matrix::Zero(T, spec.nu());
  for (int i = 0; i < spec.L(); ++i) {
    const std::int64_t bin = spec.grid.bins()[i];
    for (std::int64_t k = 0; k < T; ++k) U.row(k) += grid_phasor(bin, k, T).real() * spec.amplitudes.col(i).transpose();
  }
  return U;
}

TransferSample transfer_samples(const Matrix& A, const Matrix& B, const FrequencyGrid& grid) {
  const Eigen::Index nx = A.rows();
  const Eigen::Index nu = B.cols();
  if (A.cols() != nx || B.rows() != nx) throw DimensionError("transfer_samples: inconsistent A, B");
  TransferSample ts;
  ts.V.resize(nx + nu, static_cast<Eigen::Index>(grid.L()) * nu);
  for (int i = 0; i < grid.L(); ++i) {
    const Complex z = std::conj(grid_phasor(grid.bins()[i], 1, grid.T()));
    const CMatrix M = z * CMatrix::Identity(nx, nx) - A.cast<Complex>();
    Eigen::FullPivLU<CMatrix> lu(M);
    if (!lu.isInvertible()) throw NumericError("transfer_samples: resolvent is singular on the unit circle");
    CMatrix Vi(nx + nu, nu);
    Vi.topRows(nx) = lu.solve(B.cast<Complex>());
    Vi.bottomRows(nu) = CMatrix::Identity(nu, nu);
    ts.V.middleCols(static_cast<Eigen::Index>(i) * nu, nu) = Vi;
    ts.Vi.push_back(std::move(Vi));
  }
  return ts;
}

TransferSample transfer_samples(const SystemModel& sys, const FrequencyGrid& grid) {
  return transfer_samples(sys.A, sys.B, grid);
}

ToeplitzOperators build_toeplitz_operators(const SystemModel& sys, std::int64_t T) {
  if (T < 1) throw DimensionError("toeplitz: T must be >= 1");
  const int nx = sys.nx();
  const int nu = sys.nu();
  if (T * std::max(nx, nu) > kExplicitToeplitzBudget)
    throw ResourceError("toeplitz: explicit operators exceed the size budget; use the certified norm bounds");
  const auto t = static_cast<Eigen::Index>(T);
  ToeplitzOperators ops;
  ops.Au = Matrix::Zero(t * nx, t * nu);
  ops.Aw = Matrix::Zero(t * nx, t * nx);
  Matrix Ak = Matrix::Identity(nx, nx);
  for (Eigen::Index lag = 0; lag < t; ++lag) {
    const Matrix AkB = Ak * sys.B;
    for (Eigen::Index l = 0; l + lag < t; ++l) {
      const Eigen::Index k = l + lag;
      ops.Aw.block(k * nx, l * nx, nx, nx) = Ak;
      ops.Au.block(k * nx, l * nu, nx, nu) = AkB;
    }
    Ak = sys.A * Ak;
  }
  return ops;
}

CMatrix explicit_f_matrix(std::int64_t T, std::int64_t bin, int n) {
  if (T < 1 || n < 1) throw DimensionError("explicit_f_matrix: invalid shape");
  if (T * n > kExplicitToeplitzBudget) throw ResourceError("explicit_f_matrix: exceeds the size budget");
  CMatrix F = CMatrix::Zero(n, static_cast<Eigen::Index>(T) * n);
  for (std::int64_t k = 0; k < T; ++k)
    F.block(0, static_cast<Eigen::Index>(k) * n, n, n) =
        (grid_phasor(bin, k, T) / static_cast<double>(T)) * CMatrix::Identity(n, n);
  return F;
}

double f_matrix_norm(std::int64_t T) {
  if (T < 1) throw DomainError("f_matrix_norm: T must be >= 1");
  return 1.0 / static_cast<double>(T);
}

CMatrix SpectralDecomposition::Ue() const {
  const Eigen::Index nu = ubar.rows();
  const Eigen::Index L = ubar.cols();
  CMatrix U = CMatrix::Zero(L * nu, L);
  for (Eigen::Index i = 0; i < L; ++i) U.block(i * nu, i, nu, 1) = ubar.col(i);
  return U;
}

SpectralDecomposition decompose_spectrum(const SystemModel& sys, const Trajectory& traj, const FrequencyGrid& grid) {
  const int T = traj.T();
  const int nx = sys.nx();
  const int nu = sys.nu();
  if (grid.T() != T) throw GridError("decompose_spectrum: grid T differs from trajectory length");
  if (traj.X.cols() != nx || traj.U.cols() != nu || traj.W.rows() != T || traj.W.cols() != nx)
    throw DimensionError("decompose_spectrum: trajectory does not match the system");

  // Superposition: input-driven and disturbance-driven parts from x_0 = 0.
  const Trajectory tu = simulate(sys, traj.U, Matrix::Zero(T, nx));
  const Trajectory tw = simulate(sys, Matrix::Zero(T, nu), traj.W);
  const Matrix X = traj.X.topRows(T);
  const TransferSample ts = transfer_samples(sys, grid);

  const int L = grid.L();
  SpectralDecomposition d;
  d.Phi.resize(nx + nu, L);
  d.Phi_ud.resize(nx + nu, L);
  d.Phi_ut = CMatrix::Zero(nx + nu, L);
  d.Phi_w = CMatrix::Zero(nx + nu, L);
  d.ubar.resize(nu, L);
  for (int i = 0; i < L; ++i) {
    const std::int64_t bin = grid.bins()[i];
    const CVector ub = spectral_amplitude_bin(traj.U, bin);
    const CVector xu = spectral_amplitude_bin(tu.X.topRows(T), bin);
    const CVector xw = spectral_amplitude_bin(tw.X.topRows(T), bin);
    d.ubar.col(i) = ub;
    d.Phi.col(i).head(nx) = spectral_amplitude_bin(X, bin);
    d.Phi.col(i).tail(nu) = ub;
    d.Phi_ud.col(i) = ts.Vi[i] * ub;
    d.Phi_ut.col(i).head(nx) = xu - d.Phi_ud.col(i).head(nx);
    d.Phi_w.col(i).head(nx) = xw;
  }
  return d;
}

void write_spectrum_csv(std::ostream& os, const std::vector<double>& omegas, const CMatrix& amplitudes) {
  if (static_cast<Eigen::Index>(omegas.size()) != amplitudes.rows())
    throw DimensionError("write_spectrum_csv: one row of amplitudes per frequency");
  os << "omega";
  for (Eigen::Index c = 0; c < amplitudes.cols(); ++c) os << ",re_" << c + 1 << ",im_" << c + 1;
  os << '\n';
  os.precision(17);
  for (std::size_t r = 0; r < omegas.size(); ++r) {
    os << omegas[r];
    for (Eigen::Index c = 0; c < amplitudes.cols(); ++c) {
      const Complex v = amplitudes(static_cast<Eigen::Index>(r), c);
      os << ',' << v.real() << ',' << v.imag();
    }
    os << '\n';
  }
}

}  // namespace texplore
