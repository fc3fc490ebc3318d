#include "texplore/estimation.hpp"

#include <cmath>

namespace texplore {

namespace {

void require_delta(double delta, const char* where) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError(std::string(where) + ": delta must lie in (0, 1)");
}

bool psd_within_tolerance(const Matrix& M) { return min_eig_sym(M) >= psd_tolerance(M); }

}  // namespace

Excitation make_excitation(const Matrix& D_T, double lambda, int nx) {
  if (!(lambda > 0.0)) throw DomainError("excitation: lambda must be positive");
  if (D_T.rows() != D_T.cols()) throw DimensionError("excitation: D_T must be square");
  Excitation e;
  e.D_T = 0.5 * (D_T + D_T.transpose());
  e.lambda = lambda;
  e.nx = nx;
  e.logdet = nx * logdet_spd(e.D_T + lambda * Matrix::Identity(D_T.rows(), D_T.cols()));
  return e;
}

RlsResult rls_estimate(const RegressorMatrix& phi, const Matrix& next_states, double lambda, int nu) {
  if (!(lambda > 0.0)) throw DomainError("rls_estimate: lambda must be positive");
  const Eigen::Index nphi = phi.Phi.rows();
  const int nx = static_cast<int>(nphi) - nu;
  if (nx < 1) throw DimensionError("rls_estimate: regressor smaller than input dimension");
  if (next_states.rows() != phi.Phi.cols() || (phi.T() > 0 && next_states.cols() != nx))
    throw DimensionError("rls_estimate: next_states must be T x n_x");
  if (!phi.Phi.allFinite() || !next_states.allFinite()) throw DataError("rls_estimate: non-finite data");

  const Matrix D_T = phi.gram();
  Excitation ex = make_excitation(D_T, lambda, nx);
  if (phi.T() == 0) return {ParameterVector(Vector::Zero(nx * nphi), nx, nu), std::move(ex)};

  // (D_T kron I + lambda I)^{-1} (Phi kron I) X  ==  vec(X^T Phi^T (D_T + lambda I)^{-1}).
  Eigen::LLT<Matrix> llt(ex.D_T + lambda * Matrix::Identity(nphi, nphi));
  if (llt.info() != Eigen::Success) throw NumericError("rls_estimate: regularized Gram matrix not SPD");
  const Matrix rhs = phi.Phi * next_states;  // nphi x nx
  const Matrix AB_T = llt.solve(rhs);        // (nphi x nx) = [A, B]^T
  const Matrix AB = AB_T.transpose();
  return {ParameterVector(Eigen::Map<const Vector>(AB.data(), AB.size()), nx, nu), std::move(ex)};
}

RlsResult rls_estimate(const Trajectory& traj, double lambda) {
  return rls_estimate(build_regressors(traj), traj.X.bottomRows(traj.T()), lambda, static_cast<int>(traj.U.cols()));
}

double radius_R(const Excitation& excitation, double sigma_w, double delta, int nx) {
  require_delta(delta, "radius_R");
  if (sigma_w == 0.0) return 0.0;
  const double ntheta = static_cast<double>(nx) * excitation.nphi();
  return 8.0 * sigma_w * sigma_w *
         (nx * std::log(5.0) - std::log(delta) + 0.5 * excitation.logdet - 0.5 * ntheta * std::log(excitation.lambda));
}

ConfidenceEllipsoid confidence_ellipsoid(const RlsResult& est, double sigma_w, double delta, double theta_bar) {
  ConfidenceEllipsoid ell;
  ell.center = est.theta_hat;
  ell.shape = est.excitation;
  ell.delta = delta;
  const double R = radius_R(est.excitation, sigma_w, delta, est.excitation.nx);
  ell.radius = std::sqrt(std::max(R, 0.0)) + std::sqrt(est.excitation.lambda) * theta_bar;
  return ell;
}

double ellipsoid_distance_sq(const ConfidenceEllipsoid& ell, const ParameterVector& theta) {
  if (theta.ntheta() != ell.center.ntheta()) throw DimensionError("ellipsoid: dimension mismatch");
  const Matrix Dbar = ell.shape.D_T + ell.shape.lambda * Matrix::Identity(ell.shape.nphi(), ell.shape.nphi());
  return kron_quadratic_form(ell.center.theta() - theta.theta(), Dbar, ell.center.nx());
}

bool ellipsoid_contains(const ConfidenceEllipsoid& ell, const ParameterVector& theta) {
  return std::sqrt(std::max(0.0, ellipsoid_distance_sq(ell, theta))) <= ell.radius;
}

double goal_value(const ParameterVector& theta_hat, const ParameterVector& theta_ref, const Matrix& D_des) {
  if (theta_hat.ntheta() != theta_ref.ntheta()) throw DimensionError("goal: dimension mismatch");
  if (D_des.rows() != theta_hat.nphi() || D_des.cols() != theta_hat.nphi())
    throw DimensionError("goal: D_des must be n_phi x n_phi");
  return kron_quadratic_form(theta_ref.theta() - theta_hat.theta(), D_des, theta_hat.nx());
}

bool goal_satisfied(const ParameterVector& theta_hat, const ParameterVector& theta_ref, const Matrix& D_des) {
  return goal_value(theta_hat, theta_ref, D_des) <= 1.0;
}

double data_sufficient_margin(const RegressorMatrix& phi, double lambda, double theta_bar, double R, const Matrix& D_des) {
  const Eigen::Index n = phi.Phi.rows();
  const double scale = std::pow(std::sqrt(std::max(R, 0.0)) + std::sqrt(lambda) * theta_bar, 2);
  return min_eig_sym(phi.gram() + lambda * Matrix::Identity(n, n) - scale * D_des);
}

bool data_sufficient(const RegressorMatrix& phi, double lambda, double theta_bar, double R, const Matrix& D_des) {
  const Eigen::Index n = phi.Phi.rows();
  const double scale = std::pow(std::sqrt(std::max(R, 0.0)) + std::sqrt(lambda) * theta_bar, 2);
  return psd_within_tolerance(phi.gram() + lambda * Matrix::Identity(n, n) - scale * D_des);
}

double convex_condition_scale(double C1, double logdet, double sigma_w, double lambda, double theta_bar) {
  return 2.0 * C1 + 8.0 * sigma_w * sigma_w * logdet + 2.0 * lambda * theta_bar * theta_bar;
}

bool data_sufficient_convex(const RegressorMatrix& phi, double lambda, double theta_bar, double C1, double logdet,
                            double sigma_w, const Matrix& D_des) {
  const Eigen::Index n = phi.Phi.rows();
  const double scale = convex_condition_scale(C1, logdet, sigma_w, lambda, theta_bar);
  return psd_within_tolerance(phi.gram() + lambda * Matrix::Identity(n, n) - scale * D_des);
}

double constant_C1(double sigma_w, double delta, double lambda, int nx, int ntheta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("constant_C1: delta must lie in (0, 1]");
  if (!(lambda > 0.0)) throw DomainError("constant_C1: lambda must be positive");
  return 4.0 * sigma_w * sigma_w * (2.0 * nx * std::log(5.0) - 2.0 * std::log(delta) - ntheta * std::log(lambda));
}

nlohmann::json estimate_to_json(const RlsResult& est, double radius) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["theta_hat"] = std::vector<double>(est.theta_hat.theta().data(),
                                       est.theta_hat.theta().data() + est.theta_hat.theta().size());
  j["logdet"] = est.excitation.logdet;
  j["radius"] = radius;
  return j;
}

}  // namespace texplore
