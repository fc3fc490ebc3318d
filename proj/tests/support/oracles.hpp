#pragma once

// Reference computations written independently of the library code paths:
// explicit matrices, direct sums and dense decompositions only.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "texplore/sdpsolver.hpp"

namespace oracle {

using texplore::CMatrix;
using texplore::Complex;
using texplore::CVector;
using texplore::Matrix;
using texplore::Vector;

inline constexpr double kPi = 3.14159265358979323846;

inline double sigma_max(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(M).singularValues()(0);
}

inline double eigmin(const Matrix& S) { return Eigen::SelfAdjointEigenSolver<Matrix>(S).eigenvalues()(0); }

inline double eigmin(const CMatrix& H) {
  return Eigen::SelfAdjointEigenSolver<CMatrix>(H).eigenvalues()(0);
}

inline double eigmax(const CMatrix& H) {
  const auto ev = Eigen::SelfAdjointEigenSolver<CMatrix>(H).eigenvalues();
  return ev(ev.size() - 1);
}

/// (1/T) sum_k seq_k e^{-j 2 pi omega k}, rows of seq are time samples.
inline CVector dft_line(const Matrix& seq, double omega) {
  CVector out = CVector::Zero(seq.cols());
  const double T = static_cast<double>(seq.rows());
  for (Eigen::Index k = 0; k < seq.rows(); ++k) {
    const Complex ph = std::polar(1.0, -2.0 * kPi * omega * static_cast<double>(k));
    out += ph * seq.row(k).transpose().cast<Complex>();
  }
  return out / T;
}

/// Block lower-triangular Toeplitz operator with blocks A^{i-1-j} B.
inline Matrix toeplitz(const Matrix& A, const Matrix& B, int T) {
  const Eigen::Index nx = A.rows();
  const Eigen::Index nu = B.cols();
  Matrix M = Matrix::Zero(T * nx, T * nu);
  std::vector<Matrix> G;
  Matrix Ak = Matrix::Identity(nx, nx);
  for (int k = 0; k < T; ++k) {
    G.push_back(Ak * B);
    Ak = Ak * A;
  }
  for (int i = 1; i < T; ++i)
    for (int j = 0; j < i; ++j) M.block(i * nx, j * nu, nx, nu) = G[static_cast<std::size_t>(i - 1 - j)];
  return M;
}

/// Ridge estimate from the explicit Kronecker normal equations.
inline Vector ridge_kron(const Matrix& Phi, const Matrix& next, double lambda) {
  const Eigen::Index nx = next.cols();
  const Eigen::Index np = Phi.rows();
  const Matrix I = Matrix::Identity(nx, nx);
  Matrix G = Matrix::Zero(np * nx, np * nx);
  Vector rhs = Vector::Zero(np * nx);
  for (Eigen::Index k = 0; k < Phi.cols(); ++k) {
    Matrix Pk(nx, np * nx);  // phi_k^T kron I
    for (Eigen::Index a = 0; a < np; ++a) Pk.block(0, a * nx, nx, nx) = Phi(a, k) * I;
    G += Pk.transpose() * Pk;
    rhs += Pk.transpose() * next.row(k).transpose();
  }
  G += lambda * Matrix::Identity(np * nx, np * nx);
  return G.ldlt().solve(rhs);
}

inline double logdet_chol(const Matrix& S) {
  const Eigen::LLT<Matrix> llt(S);
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

inline Matrix random_orthogonal(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  Matrix Z(n, n);
  for (Eigen::Index i = 0; i < Z.size(); ++i) Z.data()[i] = N(rng);
  return Eigen::HouseholderQR<Matrix>(Z).householderQ();
}

inline Matrix random_symmetric(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  Matrix Z(n, n);
  for (Eigen::Index i = 0; i < Z.size(); ++i) Z.data()[i] = N(rng);
  return 0.5 * (Z + Z.transpose());
}

inline Matrix random_stable(int n, double radius, std::mt19937_64& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  Matrix A(n, n);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = N(rng);
  const double sr = Eigen::EigenSolver<Matrix>(A).eigenvalues().cwiseAbs().maxCoeff();
  return A * (radius / std::max(sr, 1e-12));
}

/// Dense SDP with a known optimum built from complementary primal slack S
/// and dual multiplier Z: S Z = 0, c_i = tr(F_i Z), optimum = -sum_b tr(F0_b Z_b).
struct CertifiedSdp {
  texplore::ConicProgram prog;
  Vector x_star;
  double optimum = 0.0;
};

inline CertifiedSdp certified_sdp(int n_vars, const std::vector<int>& sizes, std::mt19937_64& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_real_distribution<double> U(0.5, 2.0);
  CertifiedSdp out;
  out.x_star = Vector(n_vars);
  for (int i = 0; i < n_vars; ++i) out.x_star(i) = N(rng);
  out.prog.c = Vector::Zero(n_vars);
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    const int m = sizes[b];
    const int rank_s = static_cast<int>(rng() % static_cast<std::uint64_t>(m));  // Z_b != 0
    const Matrix Q = random_orthogonal(m, rng);
    Vector s = Vector::Zero(m), z = Vector::Zero(m);
    for (int i = 0; i < m; ++i) (i < rank_s ? s(i) : z(i)) = U(rng);
    const Matrix S = Q * s.asDiagonal() * Q.transpose();
    const Matrix Z = Q * z.asDiagonal() * Q.transpose();
    texplore::LmiBlock blk;
    blk.name = "b" + std::to_string(b);
    for (int i = 0; i < n_vars; ++i) {
      // The x_0 coefficient is I, so every block is strictly feasible for large x_0.
      const Matrix Fi = i == 0 ? Matrix(Matrix::Identity(m, m)) : random_symmetric(m, rng);
      blk.Fi.push_back(Fi);
      out.prog.c(i) += (Fi * Z).trace();
    }
    Matrix F0 = S;
    for (int i = 0; i < n_vars; ++i) F0 -= out.x_star(i) * blk.Fi[static_cast<std::size_t>(i)];
    blk.F0 = F0;
    out.optimum -= (F0 * Z).trace();
    out.prog.blocks.push_back(std::move(blk));
  }
  return out;
}

}  // namespace oracle
