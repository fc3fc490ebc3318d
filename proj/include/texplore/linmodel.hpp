#pragma once

// Discrete-time LTI system x_{k+1} = A x_k + B u_k + w_k, its parameter
// vector theta = vec([A, B]) (column stacking), the ellipsoidal prior set and
// trajectory simulation from x_0 = 0.

#include <cstdint>
#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "texplore/common.hpp"

namespace texplore {

struct SystemModel {
  Matrix A;
  Matrix B;
  double sigma_w = 0.0;

  SystemModel() = default;
  SystemModel(Matrix A, Matrix B, double sigma_w);

  int nx() const { return static_cast<int>(A.rows()); }
  int nu() const { return static_cast<int>(B.cols()); }
  int nphi() const { return nx() + nu(); }
  int ntheta() const { return nx() * nphi(); }
};

bool is_schur_stable(const Matrix& A);

/// Rank test on [B, AB, ..., A^{n-1}B]; singular values below
/// 1e-10 * (largest singular value) count as zero.
bool is_controllable(const Matrix& A, const Matrix& B);

/// Throws StabilityError unless A is Schur stable and (A, B) controllable.
void require_true_system(const SystemModel& sys);

class ParameterVector {
 public:
  ParameterVector() = default;
  ParameterVector(Vector theta, int nx, int nu);

  static ParameterVector from_matrices(const Matrix& A, const Matrix& B);

  const Vector& theta() const { return theta_; }
  int nx() const { return nx_; }
  int nu() const { return nu_; }
  int nphi() const { return nx_ + nu_; }
  int ntheta() const { return static_cast<int>(theta_.size()); }

  /// [A, B] as an nx x nphi matrix.
  Matrix AB() const;
  Matrix A() const;
  Matrix B() const;

 private:
  Vector theta_;
  int nx_ = 0;
  int nu_ = 0;
};

/// Reshape a length nx*nphi vector into the nx x nphi matrix it stacks.
Matrix unvec(const Vector& v, int nx, int nphi);

/// (a - b)^T (D kron I_nx) (a - b) without forming the Kronecker product.
double kron_quadratic_form(const Vector& diff, const Matrix& D, int nx);

struct PriorSet {
  ParameterVector theta_hat0;
  Matrix D0;

  PriorSet() = default;
  PriorSet(ParameterVector theta_hat0, Matrix D0);
};

/// ||theta_hat0|| + ||D0^{-1/2}||.
double theta_bound(const PriorSet& prior);

bool prior_contains(const PriorSet& prior, const ParameterVector& theta);

struct Trajectory {
  Matrix X;  // (T+1) x nx, rows x_0..x_T
  Matrix U;  // T x nu
  Matrix W;  // T x nx

  int T() const { return static_cast<int>(U.rows()); }
};

enum class NoiseKind { gaussian, uniform };

NoiseKind parse_noise_kind(const std::string& name);
std::string to_string(NoiseKind kind);

/// i.i.d. disturbance samples. Gaussian entries have standard deviation
/// sigma_w; uniform entries lie on [-sigma_w, sigma_w], whose sub-Gaussian
/// proxy variance is at most sigma_w^2.
Matrix draw_noise(NoiseKind kind, double sigma_w, int T, int nx, std::uint64_t seed);

/// Simulates from x_0 = 0 with an explicit disturbance sequence W (T x nx).
Trajectory simulate(const SystemModel& sys, const Matrix& U, const Matrix& W);

/// Simulates with disturbances drawn from `kind` at the model's sigma_w.
Trajectory simulate(const SystemModel& sys, const Matrix& U, NoiseKind kind, std::uint64_t seed);

struct RegressorMatrix {
  Matrix Phi;  // nphi x T, column k = [x_k; u_k]

  int T() const { return static_cast<int>(Phi.cols()); }
  Matrix gram() const { return Phi * Phi.transpose(); }
};

RegressorMatrix build_regressors(const Trajectory& traj);

// JSON / CSV interfaces.
SystemModel system_from_json(const nlohmann::json& j);
PriorSet prior_from_json(const nlohmann::json& j, int nx, int nu);
Matrix matrix_from_json(const nlohmann::json& j, const std::string& what);
nlohmann::json matrix_to_json(const Matrix& M);
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace texplore
