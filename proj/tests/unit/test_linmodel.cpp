#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "texplore/linmodel.hpp"

using namespace texplore;

namespace {

Matrix paper_A() {
  Matrix A(3, 3);
  A << 0.49, 0.49, 0.0, 0.0, 0.49, 0.49, 0.0, 0.0, 0.49;
  return A;
}

Matrix paper_B() { return (Matrix(3, 1) << 0.0, 0.0, 0.49).finished(); }

}  // namespace

TEST_CASE("memoryless system follows the input one step later") {
  const SystemModel sys(Matrix::Zero(1, 1), Matrix::Identity(1, 1), 0.0);
  const Trajectory tr = simulate(sys, Matrix::Ones(10, 1), Matrix::Zero(10, 1));
  CHECK(tr.X(0, 0) == 0.0);
  for (int k = 1; k <= 10; ++k) CHECK(tr.X(k, 0) == 1.0);
}

TEST_CASE("scalar impulse response is geometric") {
  const SystemModel sys(Matrix::Constant(1, 1, 0.5), Matrix::Ones(1, 1), 0.0);
  Matrix U = Matrix::Zero(12, 1);
  U(0, 0) = 1.0;
  const Trajectory tr = simulate(sys, U, Matrix::Zero(12, 1));
  for (int k = 1; k <= 12; ++k) CHECK(tr.X(k, 0) == doctest::Approx(std::pow(0.5, k - 1)).epsilon(1e-15));
}

TEST_CASE("benchmark system with zero input and zero noise stays at rest") {
  const SystemModel sys(paper_A(), paper_B(), 0.0);
  const Trajectory tr = simulate(sys, Matrix::Zero(50, 1), Matrix::Zero(50, 3));
  CHECK(tr.X.isZero(0.0));
}

TEST_CASE("noise draws") {
  SUBCASE("zero sigma gives zeros") { CHECK(draw_noise(NoiseKind::gaussian, 0.0, 20, 2, 1).isZero(0.0)); }
  SUBCASE("sample variance matches sigma^2") {
    const Matrix W = draw_noise(NoiseKind::gaussian, 0.01, 100000, 1, 5);
    const double var = W.squaredNorm() / W.size();
    CHECK(std::abs(var - 1e-4) <= 0.05 * 1e-4);
  }
  SUBCASE("uniform draws stay within sigma") {
    const Matrix W = draw_noise(NoiseKind::uniform, 0.3, 1000, 2, 9);
    CHECK(W.cwiseAbs().maxCoeff() <= 0.3);
  }
  SUBCASE("same seed is bitwise identical") {
    const Matrix a = draw_noise(NoiseKind::gaussian, 0.2, 64, 3, 42);
    const Matrix b = draw_noise(NoiseKind::gaussian, 0.2, 64, 3, 42);
    CHECK((a.array() == b.array()).all());
    CHECK_FALSE((a.array() == draw_noise(NoiseKind::gaussian, 0.2, 64, 3, 43).array()).all());
  }
  SUBCASE("unknown kind is rejected") { CHECK_THROWS_AS(parse_noise_kind("cauchy"), ConfigError); }
}

TEST_CASE("regressors") {
  SUBCASE("single step") {
    const SystemModel sys(Matrix::Zero(1, 1), Matrix::Ones(1, 1), 0.0);
    const Trajectory tr = simulate(sys, Matrix::Constant(1, 1, 3.0), Matrix::Zero(1, 1));
    const RegressorMatrix phi = build_regressors(tr);
    REQUIRE(phi.Phi.cols() == 1);
    CHECK(phi.Phi(0, 0) == 0.0);
    CHECK(phi.Phi(1, 0) == 3.0);
  }
  SUBCASE("next state equals (phi^T kron I) vec([A, B]) without noise") {
    std::mt19937_64 rng(3);
    const SystemModel sys(oracle::random_stable(3, 0.7, rng), Matrix::Random(3, 2), 0.0);
    const Trajectory tr = simulate(sys, Matrix::Random(40, 2), Matrix::Zero(40, 3));
    const RegressorMatrix phi = build_regressors(tr);
    const Vector theta = ParameterVector::from_matrices(sys.A, sys.B).theta();
    for (int k = 0; k < 40; ++k) {
      Matrix P(3, 15);
      for (int a = 0; a < 5; ++a) P.block(0, 3 * a, 3, 3) = phi.Phi(a, k) * Matrix::Identity(3, 3);
      CHECK((P * theta - tr.X.row(k + 1).transpose()).norm() <= 1e-12);
    }
  }
  SUBCASE("Gram matrix is PSD") {
    std::mt19937_64 rng(4);
    for (int r = 0; r < 20; ++r) {
      const SystemModel sys(oracle::random_stable(2, 0.9, rng), Matrix::Random(2, 1), 0.5);
      const Trajectory tr = simulate(sys, Matrix::Random(30, 1), NoiseKind::gaussian, rng());
      CHECK(oracle::eigmin(build_regressors(tr).gram()) >= -1e-10);
    }
  }
}

TEST_CASE("parameter vector layout is column-major vec([A, B])") {
  const ParameterVector p = ParameterVector::from_matrices(paper_A(), paper_B());
  CHECK(p.ntheta() == 12);
  CHECK(p.theta()(1) == 0.0);   // A(1, 0)
  CHECK(p.theta()(3) == 0.49);  // A(0, 1)
  CHECK(p.theta()(11) == 0.49); // B(2, 0)
  CHECK(p.A() == paper_A());
  CHECK(p.B() == paper_B());
}

TEST_CASE("prior bound theta_bar") {
  SUBCASE("unit prior at the origin") {
    CHECK(theta_bound(PriorSet(ParameterVector(Vector::Zero(2), 1, 1), Matrix::Identity(2, 2))) == doctest::Approx(1.0));
  }
  SUBCASE("norm 2 centre with D0 = 4 I") {
    const Vector c = (Vector(2) << 2.0, 0.0).finished();
    CHECK(theta_bound(PriorSet(ParameterVector(c, 1, 1), 4.0 * Matrix::Identity(2, 2))) == doctest::Approx(2.5));
  }
  SUBCASE("benchmark prior") {
    const Vector th = ParameterVector::from_matrices(paper_A(), paper_B()).theta().array() + 4e-4;
    const PriorSet prior(ParameterVector(th, 3, 1), 1e3 * Matrix::Identity(4, 4));
    CHECK(theta_bound(prior) == doctest::Approx(th.norm() + std::pow(10.0, -1.5)).epsilon(1e-14));
  }
}

TEST_CASE("prior membership") {
  const Vector c = (Vector(2) << 0.3, -0.2).finished();
  const PriorSet prior(ParameterVector(c, 1, 1), Matrix::Identity(2, 2));
  CHECK(prior_contains(prior, ParameterVector(c, 1, 1)));
  Vector out = c;
  out(0) += 1.0001;
  CHECK_FALSE(prior_contains(prior, ParameterVector(out, 1, 1)));
  Vector edge = c;
  edge(0) += 1.0;
  CHECK(prior_contains(prior, ParameterVector(edge, 1, 1)));
}

TEST_CASE("true system requirements") {
  CHECK_THROWS_AS(require_true_system(SystemModel(Matrix::Constant(1, 1, 1.2), Matrix::Ones(1, 1), 0.1)),
                  StabilityError);
  Matrix A = Matrix::Zero(2, 2);
  A(0, 0) = 0.5;
  CHECK_THROWS_AS(require_true_system(SystemModel(A, (Matrix(2, 1) << 1.0, 0.0).finished(), 0.1)), StabilityError);
  CHECK_NOTHROW(require_true_system(SystemModel(paper_A(), paper_B(), 0.01)));
  CHECK_THROWS_AS(SystemModel(Matrix::Zero(2, 3), Matrix::Zero(2, 1), 0.0), DimensionError);
}

TEST_CASE("configuration parsing") {
  const nlohmann::json j = {{"A", {{0.5}}}, {"B", {{1.0}}}, {"sigma_w", 0.1}};
  const SystemModel sys = system_from_json(j);
  CHECK(sys.A(0, 0) == 0.5);
  CHECK_THROWS_AS(system_from_json(nlohmann::json{{"A", {{0.5}}}}), ConfigError);
  CHECK_THROWS_AS(matrix_from_json(nlohmann::json{{1.0, 2.0}, {3.0}}, "M"), ConfigError);
}
