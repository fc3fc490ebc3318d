#include "texplore/linmodel.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <ostream>
#include <random>

namespace texplore {

SystemModel::SystemModel(Matrix A_, Matrix B_, double sigma_w_)
    : A(std::move(A_)), B(std::move(B_)), sigma_w(sigma_w_) {
  if (A.rows() < 1 || A.rows() != A.cols()) throw DimensionError("SystemModel: A must be square with n_x >= 1");
  if (B.rows() != A.rows() || B.cols() < 1) throw DimensionError("SystemModel: B must be n_x x n_u with n_u >= 1");
  if (!(sigma_w >= 0.0)) throw DomainError("SystemModel: sigma_w must be nonnegative");
  if (!A.allFinite() || !B.allFinite()) throw DataError("SystemModel: non-finite entries");
}

bool is_schur_stable(const Matrix& A) { return spectral_radius(A) < 1.0; }

bool is_controllable(const Matrix& A, const Matrix& B) {
  const Eigen::Index n = A.rows();
  Matrix ctrb(n, n * B.cols());
  Matrix blk = B;
  for (Eigen::Index k = 0; k < n; ++k) {
    ctrb.middleCols(k * B.cols(), B.cols()) = blk;
    blk = A * blk;
  }
  Eigen::JacobiSVD<Matrix> svd(ctrb);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return false;
  const double thresh = 1e-10 * s(0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > thresh) ++rank;
  return rank == n;
}

void require_true_system(const SystemModel& sys) {
  if (!is_schur_stable(sys.A)) throw StabilityError("true system: A is not Schur stable");
  if (!is_controllable(sys.A, sys.B)) throw StabilityError("true system: (A, B) is not controllable");
}

ParameterVector::ParameterVector(Vector theta, int nx, int nu) : theta_(std::move(theta)), nx_(nx), nu_(nu) {
  if (nx < 1 || nu < 1) throw DimensionError("ParameterVector: n_x and n_u must be >= 1");
  if (theta_.size() != static_cast<Eigen::Index>(nx) * (nx + nu))
    throw DimensionError("ParameterVector: length must be n_x * (n_x + n_u)");
}

ParameterVector ParameterVector::from_matrices(const Matrix& A, const Matrix& B) {
  if (A.rows() != A.cols() || B.rows() != A.rows()) throw DimensionError("ParameterVector: inconsistent A, B");
  const int nx = static_cast<int>(A.rows());
  const int nu = static_cast<int>(B.cols());
  Matrix AB(nx, nx + nu);
  AB << A, B;
  return ParameterVector(Eigen::Map<const Vector>(AB.data(), AB.size()), nx, nu);
}

Matrix unvec(const Vector& v, int nx, int nphi) {
  if (v.size() != static_cast<Eigen::Index>(nx) * nphi) throw DimensionError("unvec: length mismatch");
  return Eigen::Map<const Matrix>(v.data(), nx, nphi);
}

Matrix ParameterVector::AB() const { return unvec(theta_, nx_, nphi()); }
Matrix ParameterVector::A() const { return AB().leftCols(nx_); }
Matrix ParameterVector::B() const { return AB().rightCols(nu_); }

double kron_quadratic_form(const Vector& diff, const Matrix& D, int nx) {
  // vec(E)^T (D kron I) vec(E) = tr(E D E^T) for symmetric D.
  const Matrix E = unvec(diff, nx, static_cast<int>(D.rows()));
  return (E * D).cwiseProduct(E).sum();
}

PriorSet::PriorSet(ParameterVector theta_hat0_, Matrix D0_) : theta_hat0(std::move(theta_hat0_)), D0(std::move(D0_)) {
  if (D0.rows() != theta_hat0.nphi() || D0.cols() != theta_hat0.nphi())
    throw DimensionError("PriorSet: D0 must be n_phi x n_phi");
  if ((D0 - D0.transpose()).norm() > 1e-10 * (1.0 + D0.norm())) throw SymmetryError("PriorSet: D0 not symmetric");
  if (min_eig_sym(D0) <= 0.0) throw DomainError("PriorSet: D0 must be positive definite");
}

double theta_bound(const PriorSet& prior) {
  // ||D0^{-1/2}|| = 1 / sqrt(lambda_min(D0)).
  const double lmin = min_eig_sym(prior.D0);
  if (!(lmin > 0.0)) throw NumericError("theta_bound: D0 is singular");
  return prior.theta_hat0.theta().norm() + 1.0 / std::sqrt(lmin);
}

bool prior_contains(const PriorSet& prior, const ParameterVector& theta) {
  if (theta.ntheta() != prior.theta_hat0.ntheta()) throw DimensionError("prior_contains: dimension mismatch");
  const Vector diff = prior.theta_hat0.theta() - theta.theta();
  return kron_quadratic_form(diff, prior.D0, prior.theta_hat0.nx()) <= 1.0;
}

NoiseKind parse_noise_kind(const std::string& name) {
  if (name == "gaussian") return NoiseKind::gaussian;
  if (name == "uniform") return NoiseKind::uniform;
  throw ConfigError("unknown noise kind '" + name + "' (expected gaussian or uniform)");
}

std::string to_string(NoiseKind kind) { return kind == NoiseKind::gaussian ? "gaussian" : "uniform"; }

Matrix draw_noise(NoiseKind kind, double sigma_w, int T, int nx, std::uint64_t seed) {
  if (!(sigma_w >= 0.0)) throw DomainError("draw_noise: sigma_w must be nonnegative");
  if (T < 0 || nx < 1) throw DimensionError("draw_noise: invalid shape");
  Matrix W = Matrix::Zero(T, nx);
  if (sigma_w == 0.0) return W;
  std::mt19937_64 rng(mix_seed(seed, 0));
  if (kind == NoiseKind::gaussian) {
    std::normal_distribution<double> dist(0.0, sigma_w);
    for (int k = 0; k < T; ++k)
      for (int i = 0; i < nx; ++i) W(k, i) = dist(rng);
  } else {
    std::uniform_real_distribution<double> dist(-sigma_w, sigma_w);
    for (int k = 0; k < T; ++k)
      for (int i = 0; i < nx; ++i) W(k, i) = dist(rng);
  }
  return W;
}

Trajectory simulate(const SystemModel& sys, const Matrix& U, const Matrix& W) {
  const int T = static_cast<int>(U.rows());
  if (T < 1) throw DimensionError("simulate: T must be >= 1");
  if (U.cols() != sys.nu()) throw DimensionError("simulate: U has wrong number of input channels");
  if (W.rows() != T || W.cols() != sys.nx()) throw DimensionError("simulate: W must be T x n_x");
  if (!U.allFinite() || !W.allFinite()) throw DataError("simulate: non-finite input or disturbance");
  Trajectory traj;
  traj.U = U;
  traj.W = W;
  traj.X = Matrix::Zero(T + 1, sys.nx());
  for (int k = 0; k < T; ++k) {
    traj.X.row(k + 1) = (sys.A * traj.X.row(k).transpose() + sys.B * U.row(k).transpose() + W.row(k).transpose()).transpose();
  }
  return traj;
}

Trajectory simulate(const SystemModel& sys, const Matrix& U, NoiseKind kind, std::uint64_t seed) {
  return simulate(sys, U, draw_noise(kind, sys.sigma_w, static_cast<int>(U.rows()), sys.nx(), seed));
}

RegressorMatrix build_regressors(const Trajectory& traj) {
  const int T = traj.T();
  const Eigen::Index nx = traj.X.cols();
  const Eigen::Index nu = traj.U.cols();
  RegressorMatrix r;
  r.Phi.resize(nx + nu, T);
  r.Phi.topRows(nx) = traj.X.topRows(T).transpose();
  r.Phi.bottomRows(nu) = traj.U.transpose();
  return r;
}

Matrix matrix_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ConfigError(what + ": expected a non-empty array of rows");
  // A bare number list is read as a column vector.
  if (!j.front().is_array()) {
    Matrix M(static_cast<Eigen::Index>(j.size()), 1);
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_number()) throw ConfigError(what + ": non-numeric entry");
      M(static_cast<Eigen::Index>(i), 0) = j[i].get<double>();
    }
    return M;
  }
  const std::size_t rows = j.size();
  const std::size_t cols = j.front().size();
  Matrix M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ConfigError(what + ": ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw ConfigError(what + ": non-numeric entry");
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return M;
}

nlohmann::json matrix_to_json(const Matrix& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

SystemModel system_from_json(const nlohmann::json& j) {
  for (const char* key : {"A", "B", "sigma_w"})
    if (!j.contains(key)) throw ConfigError(std::string("system config: missing key '") + key + "'");
  if (!j["sigma_w"].is_number()) throw ConfigError("system config: sigma_w must be a number");
  try {
    return SystemModel(matrix_from_json(j["A"], "A"), matrix_from_json(j["B"], "B"), j["sigma_w"].get<double>());
  } catch (const DimensionError& e) {
    throw ConfigError(e.what());
  }
}

PriorSet prior_from_json(const nlohmann::json& j, int nx, int nu) {
  for (const char* key : {"theta_hat0", "D0"})
    if (!j.contains(key)) throw ConfigError(std::string("prior config: missing key '") + key + "'");
  const nlohmann::json& th = j["theta_hat0"];
  if (!th.is_array()) throw ConfigError("theta_hat0 must be an array");
  Vector theta(static_cast<Eigen::Index>(th.size()));
  for (std::size_t i = 0; i < th.size(); ++i) {
    if (!th[i].is_number()) throw ConfigError("theta_hat0: non-numeric entry");
    theta(static_cast<Eigen::Index>(i)) = th[i].get<double>();
  }
  try {
    return PriorSet(ParameterVector(theta, nx, nu), matrix_from_json(j["D0"], "D0"));
  } catch (const DimensionError& e) {
    throw ConfigError(e.what());
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const Eigen::Index nx = traj.X.cols();
  const Eigen::Index nu = traj.U.cols();
  os << "k";
  for (Eigen::Index i = 0; i < nx; ++i) os << ",x_" << i + 1;
  for (Eigen::Index i = 0; i < nu; ++i) os << ",u_" << i + 1;
  os << '\n';
  os.precision(17);
  // u_T does not exist; the last row carries x_T with empty input cells.
  for (int k = 0; k <= traj.T(); ++k) {
    os << k;
    for (Eigen::Index i = 0; i < nx; ++i) os << ',' << traj.X(k, i);
    for (Eigen::Index i = 0; i < nu; ++i) {
      os << ',';
      if (k < traj.T()) os << traj.U(k, i);
    }
    os << '\n';
  }
}

}  // namespace texplore
