#include "suites.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include "oracles.hpp"
#include "texplore/design.hpp"
#include "texplore/estimation.hpp"

namespace suites {

using namespace texplore;

namespace {

struct Tracker {
  SuiteResult r;
  explicit Tracker(std::string name) {
    r.name = std::move(name);
    r.worst = std::numeric_limits<double>::infinity();
  }
  void add(double margin, double scale) {
    ++r.premises_met;
    r.worst = std::min(r.worst, margin / (1.0 + std::abs(scale)));
  }
  SuiteResult done(int n) {
    r.instances = n;
    return r;
  }
};

int pick(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

double unif(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Matrix gaussian(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double s = 1.0) {
  std::normal_distribution<double> N(0.0, s);
  Matrix M(r, c);
  for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = N(rng);
  return M;
}

CMatrix cgaussian(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  return gaussian(rng, r, c).cast<Complex>() + Complex(0.0, 1.0) * gaussian(rng, r, c).cast<Complex>();
}

SystemModel random_system(std::mt19937_64& rng, double sigma_w) {
  const int nx = pick(rng, 1, 3);
  const int nu = pick(rng, 1, 2);
  return SystemModel(oracle::random_stable(nx, unif(rng, 0.05, 0.8), rng), gaussian(rng, nx, nu), sigma_w);
}

/// Distinct bins in [0, T/2], which excludes omega / 1 - omega pairs.
FrequencyGrid random_grid(std::mt19937_64& rng, int T, int L) {
  std::set<int> bins;
  while (static_cast<int>(bins.size()) < L) bins.insert(pick(rng, 0, T / 2));
  std::vector<double> f;
  for (int b : bins) f.push_back(static_cast<double>(b) / T);
  return FrequencyGrid(T, f);
}

/// Synthesizes a random multisine and simulates it with Gaussian noise.
struct LineInstance {
  SystemModel sys;
  FrequencyGrid grid;
  InputSpectrum spec;
  Trajectory traj;
};

LineInstance line_instance(std::mt19937_64& rng, int T_max) {
  LineInstance in;
  in.sys = random_system(rng, unif(rng, 0.0, 0.5));
  const int T = pick(rng, 16, T_max);
  in.grid = random_grid(rng, T, pick(rng, 1, 4));
  in.spec = InputSpectrum(in.grid, gaussian(rng, in.sys.nu(), in.grid.L()));
  const Matrix U = synth_multisine(in.spec);
  const Matrix W = gaussian(rng, T, in.sys.nx(), in.sys.sigma_w);
  in.traj = simulate(in.sys, U, W);
  return in;
}

}  // namespace

SuiteResult log_radius_bound(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tracker t("log radius bound");
  for (int k = 0; k < n; ++k) {
    const int nx = pick(rng, 1, 3);
    const int nphi = nx + pick(rng, 1, 2);
    const Matrix G = gaussian(rng, nphi, pick(rng, 1, 3 * nphi), std::pow(10.0, unif(rng, -2.0, 2.0)));
    const double lambda = std::pow(10.0, unif(rng, -2.0, 1.0));
    const double sigma = unif(rng, 0.0, 1.0);
    const double delta = unif(rng, 0.01, 0.5);
    const double theta_bar = unif(rng, 0.0, 3.0);
    const Excitation ex = make_excitation(G * G.transpose(), lambda, nx);
    const double C1 = constant_C1(sigma, delta, lambda, nx, ex.ntheta());
    const double lhs = 2.0 * C1 + 8.0 * sigma * sigma * ex.logdet + 2.0 * lambda * theta_bar * theta_bar;
    const double r = std::sqrt(radius_R(ex, sigma, delta, nx)) + std::sqrt(lambda) * theta_bar;
    t.add(lhs - r * r, lhs);
  }
  return t.done(n);
}

SuiteResult excitation_lower_bound(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tracker t("excitation lower bound");
  for (int k = 0; k < n; ++k) {
    const LineInstance in = line_instance(rng, 256);
    const RegressorMatrix phi = build_regressors(in.traj);
    const Matrix gram = phi.gram() / static_cast<double>(phi.T());
    const SpectralDecomposition d = decompose_spectrum(in.sys, in.traj, in.grid);
    const double eps = unif(rng, 0.05, 0.95);
    t.add(excitation_lower_bound_check(gram, d, eps), gram.norm());
  }
  return t.done(n);
}

SuiteResult line_covariance_bounds(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tracker t("line covariance bounds");
  for (int k = 0; k < n; ++k) {
    const LineInstance in = line_instance(rng, 96);
    const int T = in.traj.T();
    const SpectralDecomposition d = decompose_spectrum(in.sys, in.traj, in.grid);

    const DecayEnvelope env = fit_decay_envelope(in.sys.A);
    const double gu = transient_gamma_u(env, oracle::sigma_max(in.sys.B), in.grid.L(), T) * in.spec.energy();
    const double ut = oracle::eigmax(CMatrix(d.Phi_ut * d.Phi_ut.adjoint()));
    t.add(gu - ut, gu);

    const Matrix Aw = oracle::toeplitz(in.sys.A, Matrix::Identity(in.sys.nx(), in.sys.nx()), T);
    const double nAw = oracle::sigma_max(Aw);
    const double gw = static_cast<double>(in.grid.L()) / T * nAw * nAw * in.traj.W.squaredNorm();
    const double w = oracle::eigmax(CMatrix(d.Phi_w * d.Phi_w.adjoint()));
    t.add(gw - w, gw);
  }
  return t.done(n);
}

SuiteResult logdet_bound(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tracker t("logdet bound");
  for (int k = 0; k < n; ++k) {
    const LineInstance in = line_instance(rng, 96);
    const int T = in.traj.T();
    const int nx = in.sys.nx();
    const double lambda = std::pow(10.0, unif(rng, -2.0, 1.0));
    const RegressorMatrix phi = build_regressors(in.traj);
    const Matrix Dbar = phi.gram() + lambda * Matrix::Identity(in.sys.nphi(), in.sys.nphi());
    const double actual = nx * oracle::logdet_chol(Dbar);
    const double nAw = oracle::sigma_max(oracle::toeplitz(in.sys.A, Matrix::Identity(nx, nx), T));
    const double nAu = oracle::sigma_max(oracle::toeplitz(in.sys.A, in.sys.B, T));
    const double bound =
        logdet_upper_bound(nAw, in.traj.W.squaredNorm(), nAu, in.spec.energy(), lambda, T, in.sys.ntheta());
    t.add(bound - actual, bound);
  }
  return t.done(n);
}

SuiteResult convex_relaxation(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tracker t("convex relaxation");
  for (int k = 0; k < n; ++k) {
    const int nu = pick(rng, 1, 3);
    const int L = pick(rng, 1, 5);
    const Matrix U = gaussian(rng, nu, L, unif(rng, 0.1, 10.0));
    const Matrix Ut = gaussian(rng, nu, L, unif(rng, 0.1, 10.0));
    // The top-left block of S_exp at tau = 0 is (1 - eps) times the relaxed outer product.
    BoundConstants c;
    c.T = 100.0;
    c.L = L;
    c.nx = 1;
    c.nu = nu;
    c.Gamma_V.Gamma = CMatrix::Zero(1 + nu, 1 + nu);
    DesignSpec spec;
    spec.eps = unif(rng, 0.05, 0.95);
    spec.D_des = Matrix::Zero(1 + nu, 1 + nu);
    const CMatrix V = CMatrix::Zero(1 + nu, L * nu);
    const int p = L * nu;
    const CMatrix relaxed = S_exp_matrix(c, spec, V, Ut, 1.0, U, 0.0).topLeftCorner(p, p);
    const CMatrix exact = S_exp_matrix(c, spec, V, U, 1.0, U, 0.0).topLeftCorner(p, p);
    t.add(oracle::eigmin(CMatrix(exact - relaxed)), exact.norm());
  }
  return t.done(n);
}

SuiteResult s_lemma_direction(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tracker t("S-lemma direction");
  for (int k = 0; k < n; ++k) {
    const int nx = pick(rng, 1, 3);
    const int nu = pick(rng, 1, 2);
    const int nphi = nx + nu;
    const int L = pick(rng, 1, 4);
    const int p = L * nu;

    BoundConstants c;
    c.T = std::pow(10.0, unif(rng, 2.0, 6.0));
    c.L = L;
    c.nx = nx;
    c.nu = nu;
    c.C2 = unif(rng, 0.0, 5.0);
    c.C3 = C3Function{unif(rng, 0.01, 0.1), nx * nphi, c.T, unif(rng, 1.0, 3.0), unif(rng, 1.0, 100.0),
                      unif(rng, 1.0, 3.0), 1.0};
    c.Gamma_u_coeff = unif(rng, 0.0, 1e-3);
    c.Gamma_w_coeff = unif(rng, 0.0, 1e-3);
    const CMatrix Gh = cgaussian(rng, nphi, nphi) * unif(rng, 0.01, 0.3);
    c.Gamma_V.Gamma = Gh * Gh.adjoint();

    DesignSpec spec;
    spec.eps = unif(rng, 0.1, 0.9);
    spec.lambda = 1.0;
    const Matrix Dh = gaussian(rng, nphi, nphi);
    spec.D_des = Dh * Dh.transpose() * unif(rng, 0.0, 1.0);

    const CMatrix Vh = cgaussian(rng, nphi, p);
    const Matrix U = gaussian(rng, nu, L, unif(rng, 0.5, 5.0));
    const Matrix Ut = U + gaussian(rng, nu, L, 0.3);
    const double gb = U.squaredNorm() * unif(rng, 1.0, 2.0);
    const CMatrix M11 = S_exp_matrix(c, spec, Vh, Ut, gb, U, 0.0).topLeftCorner(p, p);
    const double tau = std::max(0.0, -oracle::eigmin(M11)) + unif(rng, 0.05, 2.0);

    // Smallest lambda on a bisection grid that makes S_exp PSD.
    const auto eig_at = [&](double lam) {
      spec.lambda = lam;
      return oracle::eigmin(S_exp_matrix(c, spec, Vh, Ut, gb, U, tau));
    };
    double lo = 0.0, hi = 1.0;
    while (eig_at(hi) < 0.0) hi *= 2.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (eig_at(mid) >= 0.0 ? hi : lo) = mid;
    }
    spec.lambda = hi;
    const CMatrix S = S_exp_matrix(c, spec, Vh, Ut, gb, U, tau);
    if (oracle::eigmin(S) < 0.0) continue;
    const CMatrix M22 = S.bottomRightCorner(nphi, nphi) + tau * (c.Gamma_V.Gamma - Vh * Vh.adjoint());

    // V = Vh + Gamma^{1/2} Z with ||Z|| <= 1 lies in the uncertainty set.
    Eigen::SelfAdjointEigenSolver<CMatrix> es(c.Gamma_V.Gamma);
    const CMatrix Gsq = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                        es.eigenvectors().adjoint();
    CMatrix Z = cgaussian(rng, nphi, p);
    Z /= std::max(1.0, Eigen::JacobiSVD<CMatrix>(Z).singularValues()(0));
    Z *= unif(rng, 0.0, 1.0);
    const CMatrix V = Vh + Gsq * Z;
    const CMatrix cond = V * M11 * V.adjoint() + M22;
    t.add(oracle::eigmin(cond), cond.norm() + S.norm());
  }
  return t.done(n);
}

SuiteResult sufficiency_chain(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tracker t("sufficiency chain");
  for (int k = 0; k < n; ++k) {
    const double sigma = unif(rng, 0.01, 0.3);
    const SystemModel sys = random_system(rng, sigma);
    const int T = pick(rng, 50, 300);
    const Matrix U = gaussian(rng, T, sys.nu());
    const Trajectory traj = simulate(sys, U, NoiseKind::gaussian, rng());
    const RegressorMatrix phi = build_regressors(traj);
    const double lambda = std::pow(10.0, unif(rng, -1.0, 1.0));
    const double delta = unif(rng, 0.01, 0.2);
    const RlsResult est = rls_estimate(traj, lambda);
    const ParameterVector theta_tr = ParameterVector::from_matrices(sys.A, sys.B);
    const double theta_bar = theta_tr.theta().norm() * unif(rng, 1.0, 1.5);
    const double R = radius_R(est.excitation, sigma, delta, sys.nx());
    const double C1 = constant_C1(sigma, delta, lambda, sys.nx(), sys.ntheta());
    const double r2 = std::pow(std::sqrt(R) + std::sqrt(lambda) * theta_bar, 2.0);
    const Matrix Dbar = phi.gram() + lambda * Matrix::Identity(sys.nphi(), sys.nphi());

    // Accuracy demand at a random fraction of what either condition can certify.
    const bool convex_scaled = rng() % 2 == 0;
    const double denom = convex_scaled ? convex_condition_scale(C1, est.excitation.logdet, sigma, lambda, theta_bar) : r2;
    const Matrix Dh = gaussian(rng, sys.nphi(), sys.nphi());
    const Matrix shape = Dh * Dh.transpose() + 0.1 * Matrix::Identity(sys.nphi(), sys.nphi());
    const double top = Eigen::SelfAdjointEigenSolver<Matrix>(shape).eigenvalues().maxCoeff();
    const Matrix D_des = shape * (unif(rng, 0.2, 1.2) * oracle::eigmin(Dbar) / (denom * top));

    if (data_sufficient_convex(phi, lambda, theta_bar, C1, est.excitation.logdet, sigma, D_des))
      t.add(data_sufficient_margin(phi, lambda, theta_bar, R, D_des), Dbar.norm());
    const ConfidenceEllipsoid ell = confidence_ellipsoid(est, sigma, delta, theta_bar);
    if (data_sufficient(phi, lambda, theta_bar, R, D_des) && ellipsoid_contains(ell, theta_tr))
      t.add(1.0 - goal_value(est.theta_hat, theta_tr, D_des), 1.0);
  }
  return t.done(n);
}

}  // namespace suites
