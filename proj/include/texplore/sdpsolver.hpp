#pragma once

// Dense semidefinite programs in inequality form
//   minimize c^T x  subject to  F_b(x) = F0_b + sum_i x_i Fi_b[i] >= 0  (each block b),
// solved by a primal log-det barrier path-following method with a Phase-I
// feasibility problem, plus an independent LAPACK-based verifier.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "texplore/common.hpp"

namespace texplore {

struct LmiBlock {
  std::string name;
  Matrix F0;
  std::vector<Matrix> Fi;

  int size() const { return static_cast<int>(F0.rows()); }
  /// F0 + sum_i x_i Fi.
  Matrix evaluate(const Vector& x) const;
};

struct ConicProgram {
  Vector c;
  std::vector<LmiBlock> blocks;
  std::vector<std::string> var_names;

  int n_vars() const { return static_cast<int>(c.size()); }
  /// Throws DimensionError / SymmetryError on malformed programs.
  void validate() const;
};

enum class SolveStatus { optimal, infeasible, max_iters, numerical };

std::string to_string(SolveStatus s);

struct SolverOptions {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iters = 200;        // centering (outer) iterations per phase
  int max_newton = 100;       // Newton steps per centering
  double mu0 = 1.0;           // initial barrier weight 1/t
  double mu_factor = 10.0;    // mu <- mu / mu_factor after each centering
  double backtrack = 0.5;     // line-search shrink factor
  double armijo = 0.01;       // sufficient-decrease constant
  double box = 1e8;           // Phase-I bound on |x_i|
};

struct Solution {
  Vector x;
  double objective = 0.0;
  SolveStatus status = SolveStatus::numerical;
  std::vector<double> min_eig_per_block;
  double duality_gap = 0.0;
  int newton_steps = 0;
  int outer_iterations = 0;
  std::vector<double> objective_trace;  // c^T x after each centering
  double phase1_value = 0.0;            // optimal Phase-I shift s (negative: strictly feasible)
  int binding_block = -1;               // block with the most negative Phase-I margin
  std::string message;
};

/// [[Re H, -Im H], [Im H, Re H]]; throws SymmetryError unless H is Hermitian.
Matrix hermitian_embed(const CMatrix& H);

Solution solve(const ConicProgram& prog, const SolverOptions& options = {});

struct VerifyReport {
  std::vector<double> min_eigs;
  double objective = 0.0;
  bool feasible = false;
};

/// Recomputes every block's smallest eigenvalue with LAPACK dsyev; feasible iff
/// each is >= -feas_tol (1 + ||block||).
VerifyReport verify(const ConicProgram& prog, const Vector& x, double feas_tol = 1e-8);

nlohmann::json program_to_json(const ConicProgram& prog);
ConicProgram program_from_json(const nlohmann::json& j);

}  // namespace texplore
