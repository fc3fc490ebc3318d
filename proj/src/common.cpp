#include "texplore/common.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace texplore {

double spectral_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues()(0);
}

double spectral_norm(const CMatrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(M);
  return svd.singularValues()(0);
}

double spectral_radius(const Matrix& A) {
  if (A.rows() != A.cols()) throw DimensionError("spectral_radius: matrix not square");
  if (A.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(A, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {
Eigen::VectorXd sym_eigs(const Matrix& M) {
  Matrix S = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}
Eigen::VectorXd herm_eigs(const CMatrix& H) {
  CMatrix S = 0.5 * (H + H.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}
}  // namespace

double min_eig_sym(const Matrix& M) { return M.size() == 0 ? 0.0 : sym_eigs(M).minCoeff(); }
double max_eig_sym(const Matrix& M) { return M.size() == 0 ? 0.0 : sym_eigs(M).maxCoeff(); }
double min_eig_herm(const CMatrix& H) { return H.size() == 0 ? 0.0 : herm_eigs(H).minCoeff(); }
double max_eig_herm(const CMatrix& H) { return H.size() == 0 ? 0.0 : herm_eigs(H).maxCoeff(); }

double psd_tolerance(const Matrix& M) { return -1e-9 * (1.0 + spectral_norm(M)); }
double psd_tolerance(const CMatrix& M) { return -1e-9 * (1.0 + spectral_norm(M)); }

double logdet_spd(const Matrix& M) {
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success) throw NumericError("logdet_spd: matrix not positive definite");
  const Matrix& L = llt.matrixLLT();
  double s = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) s += std::log(L(i, i));
  return 2.0 * s;
}

Matrix inv_sqrt_spd(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()));
  const Vector& ev = es.eigenvalues();
  if (ev.size() > 0 && ev.minCoeff() <= 0.0) throw NumericError("inv_sqrt_spd: matrix not positive definite");
  return es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

bool all_finite(const Matrix& M) { return M.allFinite(); }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace texplore
