#pragma once

// Exploration input design: the two energy LMIs, the robustified excitation
// LMI S_exp, the exploration SDP and its iterative refinement.
//
// Decision vector layout: x = [gamma_e, u (L n_u entries), tau], where
// u entry 1 + i n_u + c is channel c of ubar(omega_i).

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "texplore/bounds.hpp"
#include "texplore/sdpsolver.hpp"
#include "texplore/spectral.hpp"

namespace texplore {

struct DesignSpec {
  FrequencyGrid grid;
  Matrix D_des;
  double eps = 0.5;
  double lambda = 1.0;
  double delta = 0.05;
  double gamma_bar0 = 0.0;  // <= 0: chosen by the initialization search
  Matrix U_tilde0;          // n_u x L; empty: chosen by the initialization search
  double tol = 1e-3;
  int max_outer = 20;
  BoundOptions bounds;
  SolverOptions solver;

  int T_int() const;
  void validate(int nu) const;
};

struct VarLayout {
  int L = 0;
  int nu = 0;

  int n_vars() const { return 2 + L * nu; }
  int gamma() const { return 0; }
  int u(int i, int c) const { return 1 + i * nu + c; }
  int tau() const { return 1 + L * nu; }
};

/// [[gamma_e, (U_e 1)^T], [U_e 1, gamma_e I]].
LmiBlock build_energy_lmi_1(const VarLayout& lay);

/// [[gamma_bar, gamma_e], [gamma_e, 1]].
LmiBlock build_energy_lmi_2(const VarLayout& lay, double gamma_bar);

/// Complex form of S_exp at decision values (u, tau); rows/cols are
/// [L n_u amplitude coordinates; n_phi regressor coordinates].
CMatrix S_exp_matrix(const BoundConstants& consts, const DesignSpec& spec, const CMatrix& V_hat, const Matrix& U_tilde,
                     double gamma_bar, const Matrix& U_e, double tau);

/// Bottom-right block of S_exp before the S-lemma term:
/// -(2(1-eps)/eps)(Gamma_u(gamma_bar) + Gamma_w) + (lambda/T) I - (C2 + C3(gamma_bar))/T D_des.
Matrix S_exp_M22(const BoundConstants& consts, const DesignSpec& spec, double gamma_bar);

/// S_exp embedded to a real symmetric affine block in the decision variables.
LmiBlock build_S_exp(const BoundConstants& consts, const DesignSpec& spec, const CMatrix& V_hat, const Matrix& U_tilde,
                     double gamma_bar, const VarLayout& lay);

ConicProgram build_exploration_program(const BoundConstants& consts, const DesignSpec& spec, const CMatrix& V_hat,
                                       const Matrix& U_tilde, double gamma_bar);

struct ExplorationSolution {
  InputSpectrum U_e;
  double gamma_e = 0.0;
  double tau = 0.0;
  Solution solution;
  VerifyReport verification;
  ConicProgram program;

  bool ok() const { return solution.status == SolveStatus::optimal && verification.feasible; }
};

/// Minimizes gamma_e subject to the three LMIs and tau >= 0. Does not throw on
/// infeasibility; the status and binding block are in `solution`.
ExplorationSolution solve_exploration_sdp(const DesignSpec& spec, const BoundConstants& consts, const CMatrix& V_hat,
                                          const Matrix& U_tilde, double gamma_bar);

struct IterationRecord {
  double gamma_e = 0.0;
  double tau = 0.0;
  double gamma_bar = 0.0;
  SolveStatus status = SolveStatus::numerical;
  std::vector<double> margins;  // verifier eigmin per block
  int newton_steps = 0;
};

struct DesignResult {
  InputSpectrum U_e;
  double gamma_e = 0.0;
  double tau = 0.0;
  std::vector<IterationRecord> iterations;
  bool certified = false;
  bool converged = false;
  std::string note;
  Matrix U_tilde_final;  // linearization point of the returned solve
  double gamma_bar_final = 0.0;
  double alpha_init = 0.0;
  int init_solves = 0;
  BoundConstants consts;
  CMatrix V_hat;
};

/// Full design: constants, initialization, and the refinement
/// loop Utilde <- U_e*, gamma_bar <- gamma_e*^2 until the relative change in
/// gamma_e falls below tol. Throws InfeasibleError if the first solve fails.
DesignResult design_exploration(const DesignSpec& spec, const PriorSet& prior, double sigma_w);

/// Same, with constants computed by the caller.
DesignResult design_exploration(const DesignSpec& spec, const PriorSet& prior, const BoundConstants& consts);

nlohmann::json design_to_json(const DesignResult& r, const DesignSpec& spec);

}  // namespace texplore
