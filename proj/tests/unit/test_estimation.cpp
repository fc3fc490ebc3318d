#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "suites.hpp"
#include "texplore/estimation.hpp"

using namespace texplore;

TEST_CASE("ridge estimate") {
  SUBCASE("no data returns zero") {
    RegressorMatrix phi;
    phi.Phi = Matrix::Zero(3, 0);
    const RlsResult r = rls_estimate(phi, Matrix::Zero(0, 2), 0.7, 1);
    CHECK(r.theta_hat.theta().isZero(0.0));
    CHECK(r.theta_hat.ntheta() == 6);
  }
  SUBCASE("noiseless data recovers the system") {
    std::mt19937_64 rng(1);
    const SystemModel sys(oracle::random_stable(2, 0.8, rng), Matrix::Random(2, 1), 0.0);
    const Trajectory tr = simulate(sys, Matrix::Random(200, 1), Matrix::Zero(200, 2));
    const RlsResult r = rls_estimate(tr, 1e-8);
    CHECK((r.theta_hat.theta() - ParameterVector::from_matrices(sys.A, sys.B).theta()).norm() <= 1e-4);
  }
  SUBCASE("scalar closed form") {
    RegressorMatrix phi;
    phi.Phi = (Matrix(2, 2) << 0.0, 1.0, 1.0, 0.5).finished();
    const Matrix next = (Matrix(2, 1) << 1.0, 0.7).finished();
    const double lambda = 0.3;
    const Vector ref = oracle::ridge_kron(phi.Phi, next, lambda);
    CHECK((rls_estimate(phi, next, lambda, 1).theta_hat.theta() - ref).norm() <= 1e-14);
    RegressorMatrix one;
    one.Phi = (Matrix(2, 1) << 2.0, 0.0).finished();
    const Vector th = rls_estimate(one, Matrix::Constant(1, 1, 3.0), 1.0, 1).theta_hat.theta();
    CHECK(th(0) == doctest::Approx(6.0 / 5.0));
    CHECK(th(1) == 0.0);
  }
  SUBCASE("matches the Kronecker normal equations") {
    std::mt19937_64 rng(2);
    for (int r = 0; r < 10; ++r) {
      const SystemModel sys(oracle::random_stable(3, 0.9, rng), Matrix::Random(3, 2), 0.3);
      const Trajectory tr = simulate(sys, Matrix::Random(60, 2), NoiseKind::gaussian, rng());
      const RegressorMatrix phi = build_regressors(tr);
      const Vector ref = oracle::ridge_kron(phi.Phi, tr.X.bottomRows(60), 0.5);
      CHECK((rls_estimate(tr, 0.5).theta_hat.theta() - ref).norm() <= 1e-10 * (1.0 + ref.norm()));
    }
  }
  SUBCASE("rejects non-finite data") {
    RegressorMatrix phi;
    phi.Phi = Matrix::Ones(2, 3);
    phi.Phi(0, 1) = std::nan("");
    CHECK_THROWS_AS(rls_estimate(phi, Matrix::Ones(3, 1), 1.0, 1), DataError);
  }
}

TEST_CASE("radius") {
  CHECK(radius_R(make_excitation(Matrix::Zero(2, 2), 1.0, 1), 1.0, 0.2, 1) == doctest::Approx(8.0 * std::log(25.0)));
  CHECK(radius_R(make_excitation(Matrix::Identity(2, 2), 1.0, 1), 0.0, 0.2, 1) == 0.0);
  const double s = 0.01;
  CHECK(radius_R(make_excitation(Matrix::Zero(4, 4), 1.0, 3), s, 0.05, 3) ==
        doctest::Approx(8.0 * s * s * (3.0 * std::log(5.0) - std::log(0.05))));
  CHECK_THROWS_AS(radius_R(make_excitation(Matrix::Zero(2, 2), 1.0, 1), 1.0, 1.5, 1), DomainError);
}

TEST_CASE("confidence ellipsoid membership") {
  std::mt19937_64 rng(3);
  const SystemModel sys(Matrix::Constant(1, 1, 0.5), Matrix::Ones(1, 1), 0.1);
  const Trajectory tr = simulate(sys, Matrix::Random(50, 1), NoiseKind::gaussian, 4);
  const RlsResult est = rls_estimate(tr, 1.0);
  ConfidenceEllipsoid ell = confidence_ellipsoid(est, 0.1, 0.05, 2.0);
  CHECK(ellipsoid_contains(ell, est.theta_hat));
  ell.radius = 0.0;
  Vector off = est.theta_hat.theta();
  off(0) += 1e-3;
  CHECK_FALSE(ellipsoid_contains(ell, ParameterVector(off, 1, 1)));
}

TEST_CASE("containment frequency on a scalar system") {
  const SystemModel sys(Matrix::Constant(1, 1, 0.8), Matrix::Ones(1, 1), 0.1);
  const ParameterVector tr_theta = ParameterVector::from_matrices(sys.A, sys.B);
  int hit = 0;
  for (int r = 0; r < 500; ++r) {
    std::mt19937_64 rng(mix_seed(77, static_cast<std::uint64_t>(r)));
    std::normal_distribution<double> N;
    Matrix U(200, 1);
    for (int k = 0; k < 200; ++k) U(k, 0) = N(rng);
    const RlsResult est = rls_estimate(simulate(sys, U, NoiseKind::gaussian, rng()), 1.0);
    hit += ellipsoid_contains(confidence_ellipsoid(est, 0.1, 0.05, tr_theta.theta().norm()), tr_theta);
  }
  CHECK(hit >= 475);
}

TEST_CASE("exploration goal") {
  const Vector ref = Vector::Zero(2);
  SUBCASE("exact estimate") { CHECK(goal_satisfied(ParameterVector(ref, 1, 1), ParameterVector(ref, 1, 1), Matrix::Identity(2, 2))); }
  SUBCASE("boundary at D_des = 1e-4 I and error norm 100") {
    Vector e = Vector::Zero(2);
    e(0) = 100.0;
    CHECK(goal_satisfied(ParameterVector(e, 1, 1), ParameterVector(Vector::Zero(2), 1, 1), 1e-4 * Matrix::Identity(2, 2)));
  }
  SUBCASE("error 1.1 against D_des = I") {
    Vector e = Vector::Zero(2);
    e(1) = 1.1;
    CHECK_FALSE(goal_satisfied(ParameterVector(e, 1, 1), ParameterVector(Vector::Zero(2), 1, 1), Matrix::Identity(2, 2)));
  }
}

TEST_CASE("data sufficiency conditions") {
  RegressorMatrix phi;
  phi.Phi = Matrix::Zero(2, 5);
  CHECK(data_sufficient(phi, 1.0, 0.0, 0.0, Matrix::Zero(2, 2)));
  CHECK(data_sufficient_convex(phi, 1.0, 0.0, 0.0, 0.0, 0.0, Matrix::Zero(2, 2)));
  CHECK_FALSE(data_sufficient(phi, 1.0, 1.0, 0.0, 2.0 * Matrix::Identity(2, 2)));
  CHECK(data_sufficient_margin(phi, 1.0, 1.0, 0.0, 2.0 * Matrix::Identity(2, 2)) == doctest::Approx(-1.0));
  CHECK(data_sufficient_margin(phi, 1.0, 0.0, 0.0, 2.0 * Matrix::Identity(2, 2)) == doctest::Approx(1.0));
}

TEST_CASE("constant C1") {
  CHECK(constant_C1(0.3, 1.0, 1.0, 2, 6) == doctest::Approx(4.0 * 0.09 * 2.0 * 2.0 * std::log(5.0)));
  CHECK(constant_C1(0.0, 0.05, 1.0, 3, 12) == 0.0);
  CHECK(constant_C1(0.01, 0.05, 1.0, 3, 12) == doctest::Approx(4e-4 * (6.0 * std::log(5.0) + 2.0 * std::log(20.0))));
}

TEST_CASE("radius bound and sufficiency implication suites") {
  const suites::SuiteResult a = suites::log_radius_bound(200, 101);
  const suites::SuiteResult b = suites::sufficiency_chain(200, 102);
  CHECK(a.pass());
  CHECK(b.pass());
  CHECK(b.premises_met >= 100);
}
