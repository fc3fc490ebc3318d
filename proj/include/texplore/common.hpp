#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace texplore {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// Error hierarchy. Each category maps to one failure class named in the
// module contracts; callers that only care about "something went wrong"
// catch texplore::Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};
class DomainError : public Error {
 public:
  using Error::Error;
};
class NumericError : public Error {
 public:
  using Error::Error;
};
class DataError : public Error {
 public:
  using Error::Error;
};
class GridError : public Error {
 public:
  using Error::Error;
};
class StabilityError : public Error {
 public:
  using Error::Error;
};
class ResourceError : public Error {
 public:
  using Error::Error;
};
class SymmetryError : public Error {
 public:
  using Error::Error;
};
class ConfigError : public Error {
 public:
  using Error::Error;
};
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Largest singular value.
double spectral_norm(const Matrix& M);
double spectral_norm(const CMatrix& M);

/// Largest |eigenvalue| of a square matrix.
double spectral_radius(const Matrix& A);

/// Extreme eigenvalues of the symmetric (Hermitian) part of M.
double min_eig_sym(const Matrix& M);
double max_eig_sym(const Matrix& M);
double min_eig_herm(const CMatrix& H);
double max_eig_herm(const CMatrix& H);

/// Relative PSD tolerance used throughout: -1e-9 * (1 + ||M||).
double psd_tolerance(const Matrix& M);
double psd_tolerance(const CMatrix& M);

/// Log-determinant of a symmetric positive-definite matrix via Cholesky.
/// Throws NumericError if the factorization fails.
double logdet_spd(const Matrix& M);

/// Symmetric inverse square root of an SPD matrix.
Matrix inv_sqrt_spd(const Matrix& M);

bool all_finite(const Matrix& M);

/// SplitMix64 finalizer; used to derive independent per-replica seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace texplore
