#pragma once

// Spectral lines of finite sequences, multisine synthesis, steady-state
// transfer samples and the finite-horizon response operators.
//
// Convention: frequencies are in cycles per sample, the line amplitude of a
// sequence s_0..s_{T-1} at omega is (1/T) sum_k s_k exp(-j 2 pi omega k), and
// the transfer sample is V(omega) = [(exp(j 2 pi omega) I - A)^{-1} B; I].

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "texplore/linmodel.hpp"

namespace texplore {

class FrequencyGrid {
 public:
  FrequencyGrid() = default;
  /// Frequencies must lie on {0, 1/T, ..., (T-1)/T}, be pairwise distinct and
  /// contain no pair omega, 1 - omega (both name the same real cosine).
  FrequencyGrid(std::int64_t T, const std::vector<double>& freqs);

  std::int64_t T() const { return T_; }
  int L() const { return static_cast<int>(bins_.size()); }
  const std::vector<std::int64_t>& bins() const { return bins_; }
  double omega(int i) const { return static_cast<double>(bins_[i]) / static_cast<double>(T_); }
  std::vector<double> omegas() const;

 private:
  std::int64_t T_ = 0;
  std::vector<std::int64_t> bins_;
};

/// Index k with omega = k / T, or GridError if omega is off-grid.
std::int64_t grid_bin(double omega, std::int64_t T);

/// exp(-j 2 pi bin n / T) evaluated with exact integer phase reduction.
Complex grid_phasor(std::int64_t bin, std::int64_t n, std::int64_t T);

struct InputSpectrum {
  FrequencyGrid grid;
  Matrix amplitudes;  // n_u x L, column i = ubar(omega_i)

  InputSpectrum() = default;
  InputSpectrum(FrequencyGrid grid, Matrix amplitudes);

  int nu() const { return static_cast<int>(amplitudes.rows()); }
  int L() const { return grid.L(); }

  /// Block-diagonal U_e (L n_u x L).
  Matrix Ue() const;
  /// Stacked amplitudes U_e 1 (length L n_u, block i = ubar(omega_i)).
  Vector stacked() const;
  /// sum_i ||ubar(omega_i)||^2.
  double energy() const { return amplitudes.squaredNorm(); }
};

/// Inverse of InputSpectrum::stacked.
InputSpectrum spectrum_from_stacked(const FrequencyGrid& grid, const Vector& stacked, int nu);

/// Line amplitude of the rows of `seq` (T x d) at an on-grid omega.
CVector spectral_amplitude(const Matrix& seq, double omega);
CVector spectral_amplitude_bin(const Matrix& seq, std::int64_t bin);

/// Line amplitudes at every grid frequency via FFT; row m is the amplitude at m / T.
CMatrix full_spectrum(const Matrix& seq);

/// u_k = sum_i ubar(omega_i) cos(2 pi omega_i k), k = 0..T-1.
Matrix synth_multisine(const InputSpectrum& spec);

struct TransferSample {
  std::vector<CMatrix> Vi;  // each n_phi x n_u
  CMatrix V;                // n_phi x L n_u

  int L() const { return static_cast<int>(Vi.size()); }
};

TransferSample transfer_samples(const Matrix& A, const Matrix& B, const FrequencyGrid& grid);
TransferSample transfer_samples(const SystemModel& sys, const FrequencyGrid& grid);

/// Explicit lower block-Toeplitz maps from u_0..u_{T-1} (resp. w_0..w_{T-1})
/// to x_1..x_T: block (k, l) = A^{k-l} B (resp. A^{k-l}) for k >= l.
struct ToeplitzOperators {
  Matrix Au;  // T n_x x T n_u
  Matrix Aw;  // T n_x x T n_x
};

/// Largest T * max(n_x, n_u) for which explicit construction is allowed.
inline constexpr std::int64_t kExplicitToeplitzBudget = 2048;

ToeplitzOperators build_toeplitz_operators(const SystemModel& sys, std::int64_t T);

/// Explicit F_{x,omega} = (1/T) [exp(-j 2 pi omega k) I]_{k=0..T-1}, n x T n.
CMatrix explicit_f_matrix(std::int64_t T, std::int64_t bin, int n);

/// ||F_{x,omega}||^2 = 1/T.
double f_matrix_norm(std::int64_t T);

/// Exact split of the regressor lines at the grid frequencies into the
/// steady-state input response, the input transient and the disturbance part:
///   phibar = Phi_ud + Phi_ut + Phi_w (column-wise),
/// where Phi_ud = V ubar uses the measured input line amplitudes ubar.
struct SpectralDecomposition {
  CMatrix Phi;     // n_phi x L
  CMatrix Phi_ud;  // n_phi x L
  CMatrix Phi_ut;  // n_phi x L, input rows zero
  CMatrix Phi_w;   // n_phi x L, input rows zero
  CMatrix ubar;    // n_u x L, measured input line amplitudes

  /// Block-diagonal complex U_e of the measured amplitudes.
  CMatrix Ue() const;
};

SpectralDecomposition decompose_spectrum(const SystemModel& sys, const Trajectory& traj, const FrequencyGrid& grid);

/// Rows "omega,re_1,im_1,...", one per frequency; amplitudes is L x d.
void write_spectrum_csv(std::ostream& os, const std::vector<double>& omegas, const CMatrix& amplitudes);

}  // namespace texplore
