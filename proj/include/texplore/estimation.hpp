#pragma once

// Regularized least squares, the self-normalized confidence radius and the
// data-dependent sufficient conditions for the accuracy goal
//   (theta_ref - theta_hat)^T (D_des kron I) (theta_ref - theta_hat) <= 1.
//
// Every n_theta x n_theta quantity has the form M kron I_nx; all routines
// work with the n_phi x n_phi factor M and scale by n_x where needed.

#include <nlohmann/json.hpp>

#include "texplore/linmodel.hpp"

namespace texplore {

struct Excitation {
  Matrix D_T;           // Phi Phi^T, n_phi x n_phi
  double lambda = 1.0;  // regularization
  int nx = 1;
  double logdet = 0.0;  // log det(D_T kron I + lambda I) = nx * log det(D_T + lambda I)

  int nphi() const { return static_cast<int>(D_T.rows()); }
  int ntheta() const { return nx * nphi(); }
};

Excitation make_excitation(const Matrix& D_T, double lambda, int nx);

struct RlsResult {
  ParameterVector theta_hat;
  Excitation excitation;
};

/// Regularized least squares. `next_states` holds x_1..x_T as rows (T x nx),
/// aligned with the columns of Phi. One Cholesky of D_T + lambda I is shared
/// by all nx right-hand sides.
RlsResult rls_estimate(const RegressorMatrix& phi, const Matrix& next_states, double lambda, int nu);

/// Convenience overload on a simulated trajectory.
RlsResult rls_estimate(const Trajectory& traj, double lambda);

/// R(Dbar_T) = 8 sigma_w^2 (nx log 5 - log delta + logdet/2 - n_theta log(lambda)/2).
double radius_R(const Excitation& excitation, double sigma_w, double delta, int nx);

struct ConfidenceEllipsoid {
  ParameterVector center;
  Excitation shape;
  double radius = 0.0;  // R^{1/2} + lambda^{1/2} theta_bar
  double delta = 0.05;
};

ConfidenceEllipsoid confidence_ellipsoid(const RlsResult& est, double sigma_w, double delta, double theta_bar);

/// ||center - theta||_{Dbar_T}^2.
double ellipsoid_distance_sq(const ConfidenceEllipsoid& ell, const ParameterVector& theta);

bool ellipsoid_contains(const ConfidenceEllipsoid& ell, const ParameterVector& theta);

/// Left-hand side of the accuracy goal.
double goal_value(const ParameterVector& theta_hat, const ParameterVector& theta_ref, const Matrix& D_des);

bool goal_satisfied(const ParameterVector& theta_hat, const ParameterVector& theta_ref, const Matrix& D_des);

/// lambda_min(Phi Phi^T + lambda I - (R^{1/2} + lambda^{1/2} theta_bar)^2 D_des).
double data_sufficient_margin(const RegressorMatrix& phi, double lambda, double theta_bar, double R, const Matrix& D_des);
bool data_sufficient(const RegressorMatrix& phi, double lambda, double theta_bar, double R, const Matrix& D_des);

/// Scale factor 2 C1 + 8 sigma_w^2 logdet + 2 lambda theta_bar^2 of the convex condition.
double convex_condition_scale(double C1, double logdet, double sigma_w, double lambda, double theta_bar);

bool data_sufficient_convex(const RegressorMatrix& phi, double lambda, double theta_bar, double C1, double logdet,
                            double sigma_w, const Matrix& D_des);

/// C1 = 4 sigma_w^2 (log(5^{2 nx} / delta^2) - n_theta log lambda).
double constant_C1(double sigma_w, double delta, double lambda, int nx, int ntheta);

nlohmann::json estimate_to_json(const RlsResult& est, double radius);

}  // namespace texplore
