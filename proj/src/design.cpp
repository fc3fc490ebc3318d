#include "texplore/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace texplore {

int DesignSpec::T_int() const {
  if (grid.T() > std::numeric_limits<int>::max()) throw ResourceError("design: T too large to simulate");
  return static_cast<int>(grid.T());
}

void DesignSpec::validate(int nu) const {
  if (grid.L() < 1) throw ConfigError("design: empty frequency grid");
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("design: eps must lie in (0, 1)");
  if (!(lambda > 0.0)) throw ConfigError("design: lambda must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("design: delta must lie in (0, 1)");
  if (!(tol > 0.0)) throw ConfigError("design: tol must be positive");
  if (max_outer < 1) throw ConfigError("design: max_outer must be >= 1");
  if (D_des.rows() != D_des.cols() || D_des.rows() < 2) throw ConfigError("design: D_des must be square n_phi x n_phi");
  if ((D_des - D_des.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + D_des.cwiseAbs().maxCoeff()))
    throw ConfigError("design: D_des must be symmetric");
  if (min_eig_sym(D_des) < 0.0) throw ConfigError("design: D_des must be positive semidefinite");
  if (U_tilde0.size() > 0 && (U_tilde0.rows() != nu || U_tilde0.cols() != grid.L()))
    throw ConfigError("design: U_tilde0 must be n_u x L");
}

LmiBlock build_energy_lmi_1(const VarLayout& lay) {
  const int m = 1 + lay.L * lay.nu;
  LmiBlock b;
  b.name = "energy1";
  b.F0 = Matrix::Zero(m, m);
  b.Fi.assign(static_cast<std::size_t>(lay.n_vars()), Matrix::Zero(m, m));
  b.Fi[static_cast<std::size_t>(lay.gamma())] = Matrix::Identity(m, m);
  for (int i = 0; i < lay.L; ++i)
    for (int c = 0; c < lay.nu; ++c) {
      const int v = lay.u(i, c);
      Matrix& F = b.Fi[static_cast<std::size_t>(v)];
      F(0, v) = 1.0;
      F(v, 0) = 1.0;
    }
  return b;
}

LmiBlock build_energy_lmi_2(const VarLayout& lay, double gamma_bar) {
  if (!(gamma_bar > 0.0)) throw DomainError("energy LMI 2: gamma_bar must be positive");
  LmiBlock b;
  b.name = "energy2";
  b.F0 = Matrix::Zero(2, 2);
  b.F0(0, 0) = gamma_bar;
  b.F0(1, 1) = 1.0;
  b.Fi.assign(static_cast<std::size_t>(lay.n_vars()), Matrix::Zero(2, 2));
  Matrix& F = b.Fi[static_cast<std::size_t>(lay.gamma())];
  F(0, 1) = 1.0;
  F(1, 0) = 1.0;
  return b;
}

Matrix S_exp_M22(const BoundConstants& consts, const DesignSpec& spec, double gamma_bar) {
  const int nphi = consts.nphi();
  const double k = 2.0 * (1.0 - spec.eps) / spec.eps;
  const double T = consts.T;
  return -k * (consts.Gamma_u(gamma_bar) + consts.Gamma_w()) + (spec.lambda / T) * Matrix::Identity(nphi, nphi) -
         ((consts.C2 + consts.C3(gamma_bar)) / T) * spec.D_des;
}

namespace {

/// N = [[-I, V^H], [V, Gamma_V - V V^H]] of the uncertainty description.
CMatrix uncertainty_matrix(const BoundConstants& consts, const CMatrix& V_hat) {
  const Eigen::Index p = V_hat.cols();
  const Eigen::Index nphi = V_hat.rows();
  CMatrix N(p + nphi, p + nphi);
  N.topLeftCorner(p, p) = -CMatrix::Identity(p, p);
  N.topRightCorner(p, nphi) = V_hat.adjoint();
  N.bottomLeftCorner(nphi, p) = V_hat;
  N.bottomRightCorner(nphi, nphi) = consts.Gamma_V.Gamma - V_hat * V_hat.adjoint();
  return 0.5 * (N + N.adjoint());
}

/// blockdiag_i(a_i b_i^T + b_i a_i^T - b_i b_i^T) for amplitude matrices (n_u x L).
Matrix relaxed_outer(const Matrix& U_e, const Matrix& U_tilde) {
  const Eigen::Index nu = U_e.rows();
  const Eigen::Index L = U_e.cols();
  Matrix M = Matrix::Zero(L * nu, L * nu);
  for (Eigen::Index i = 0; i < L; ++i) {
    const Vector a = U_e.col(i);
    const Vector b = U_tilde.col(i);
    M.block(i * nu, i * nu, nu, nu) = a * b.transpose() + b * a.transpose() - b * b.transpose();
  }
  return M;
}

}  // namespace

CMatrix S_exp_matrix(const BoundConstants& consts, const DesignSpec& spec, const CMatrix& V_hat, const Matrix& U_tilde,
                     double gamma_bar, const Matrix& U_e, double tau) {
  const Eigen::Index p = V_hat.cols();
  const Eigen::Index nphi = V_hat.rows();
  CMatrix S = CMatrix::Zero(p + nphi, p + nphi);
  S.topLeftCorner(p, p) = ((1.0 - spec.eps) * relaxed_outer(U_e, U_tilde)).cast<Complex>();
  S.bottomRightCorner(nphi, nphi) = S_exp_M22(consts, spec, gamma_bar).cast<Complex>();
  return S - tau * uncertainty_matrix(consts, V_hat);
}

LmiBlock build_S_exp(const BoundConstants& consts, const DesignSpec& spec, const CMatrix& V_hat, const Matrix& U_tilde,
                     double gamma_bar, const VarLayout& lay) {
  const int p = lay.L * lay.nu;
  const int nphi = consts.nphi();
  if (V_hat.rows() != nphi || V_hat.cols() != p) throw DimensionError("S_exp: V_hat must be n_phi x L n_u");
  if (U_tilde.rows() != lay.nu || U_tilde.cols() != lay.L) throw DimensionError("S_exp: U_tilde must be n_u x L");
  const int m = p + nphi;

  LmiBlock b;
  b.name = "S_exp";
  // Constant part: U_e = 0, tau = 0.
  b.F0 = hermitian_embed(S_exp_matrix(consts, spec, V_hat, U_tilde, gamma_bar, Matrix::Zero(lay.nu, lay.L), 0.0));
  b.Fi.assign(static_cast<std::size_t>(lay.n_vars()), Matrix::Zero(2 * m, 2 * m));
  for (int i = 0; i < lay.L; ++i)
    for (int c = 0; c < lay.nu; ++c) {
      CMatrix F = CMatrix::Zero(m, m);
      for (int r = 0; r < lay.nu; ++r) {
        F(i * lay.nu + c, i * lay.nu + r) += (1.0 - spec.eps) * U_tilde(r, i);
        F(i * lay.nu + r, i * lay.nu + c) += (1.0 - spec.eps) * U_tilde(r, i);
      }
      b.Fi[static_cast<std::size_t>(lay.u(i, c))] = hermitian_embed(F);
    }
  b.Fi[static_cast<std::size_t>(lay.tau())] = hermitian_embed(-uncertainty_matrix(consts, V_hat));
  return b;
}

ConicProgram build_exploration_program(const BoundConstants& consts, const DesignSpec& spec, const CMatrix& V_hat,
                                       const Matrix& U_tilde, double gamma_bar) {
  VarLayout lay{spec.grid.L(), consts.nu};
  ConicProgram prog;
  prog.c = Vector::Zero(lay.n_vars());
  prog.c(lay.gamma()) = 1.0;
  prog.var_names.assign(static_cast<std::size_t>(lay.n_vars()), "");
  prog.var_names[static_cast<std::size_t>(lay.gamma())] = "gamma_e";
  for (int i = 0; i < lay.L; ++i)
    for (int c = 0; c < lay.nu; ++c)
      prog.var_names[static_cast<std::size_t>(lay.u(i, c))] = "u_" + std::to_string(i) + "_" + std::to_string(c);
  prog.var_names[static_cast<std::size_t>(lay.tau())] = "tau";

  prog.blocks.push_back(build_energy_lmi_1(lay));
  prog.blocks.push_back(build_energy_lmi_2(lay, gamma_bar));
  prog.blocks.push_back(build_S_exp(consts, spec, V_hat, U_tilde, gamma_bar, lay));
  LmiBlock tau;
  tau.name = "tau_nonneg";
  tau.F0 = Matrix::Zero(1, 1);
  tau.Fi.assign(static_cast<std::size_t>(lay.n_vars()), Matrix::Zero(1, 1));
  tau.Fi[static_cast<std::size_t>(lay.tau())](0, 0) = 1.0;
  prog.blocks.push_back(std::move(tau));
  return prog;
}

ExplorationSolution solve_exploration_sdp(const DesignSpec& spec, const BoundConstants& consts, const CMatrix& V_hat,
                                          const Matrix& U_tilde, double gamma_bar) {
  ExplorationSolution out;
  out.program = build_exploration_program(consts, spec, V_hat, U_tilde, gamma_bar);
  out.solution = solve(out.program, spec.solver);
  const VarLayout lay{spec.grid.L(), consts.nu};
  const Vector& x = out.solution.x;
  out.gamma_e = x(lay.gamma());
  out.tau = x(lay.tau());
  out.U_e = spectrum_from_stacked(spec.grid, x.segment(1, static_cast<Eigen::Index>(lay.L) * lay.nu), lay.nu);
  out.verification = verify(out.program, x, spec.solver.feas_tol);
  return out;
}

namespace {

// Energy bound at an initialization point, relative to its energy L alpha^2.
constexpr double kInitEnergyFactor = 1.25;

Matrix equal_channel0(int nu, int L, double alpha) {
  Matrix U = Matrix::Zero(nu, L);
  U.row(0).setConstant(alpha);
  return U;
}

IterationRecord record_of(const ExplorationSolution& s, double gamma_bar) {
  IterationRecord r;
  r.gamma_e = s.gamma_e;
  r.tau = s.tau;
  r.gamma_bar = gamma_bar;
  r.status = s.solution.status;
  r.margins = s.verification.min_eigs;
  r.newton_steps = s.solution.newton_steps;
  return r;
}

}  // namespace

DesignResult design_exploration(const DesignSpec& spec, const PriorSet& prior, double sigma_w) {
  const BoundConstants consts =
      compute_bound_constants(prior, spec.grid, sigma_w, spec.lambda, spec.delta, spec.bounds);
  return design_exploration(spec, prior, consts);
}

DesignResult design_exploration(const DesignSpec& spec, const PriorSet& prior, const BoundConstants& consts) {
  const int nu = prior.theta_hat0.nu();
  const int L = spec.grid.L();
  spec.validate(nu);
  if (spec.D_des.rows() != prior.theta_hat0.nphi()) throw ConfigError("design: D_des must be n_phi x n_phi");

  DesignResult res;
  res.consts = consts;
  res.V_hat = transfer_samples(prior.theta_hat0.A(), prior.theta_hat0.B(), spec.grid).V;

  // A zero accuracy requirement is met by any data set.
  if (spec.D_des.isZero(0.0)) {
    res.U_e = InputSpectrum(spec.grid, Matrix::Zero(nu, L));
    res.certified = true;
    res.converged = true;
    res.note = "D_des = 0: the accuracy goal holds for every estimate; no excitation required";
    return res;
  }

  // Initial linearization point.
  Matrix U_tilde;
  double gamma_bar = 0.0;
  ExplorationSolution first;
  bool have_first = false;
  if (spec.U_tilde0.size() > 0 && spec.gamma_bar0 > 0.0) {
    U_tilde = spec.U_tilde0;
    gamma_bar = spec.gamma_bar0;
  } else {
    const auto try_alpha = [&](double alpha, ExplorationSolution& s) {
      ++res.init_solves;
      s = solve_exploration_sdp(spec, consts, res.V_hat, equal_channel0(nu, L, alpha), kInitEnergyFactor * L * alpha * alpha);
      return s.ok();
    };
    double lo = 0.0;
    double hi = 1.0;
    ExplorationSolution s;
    if (try_alpha(hi, s)) {
      first = s;
      lo = hi / 2.0;
      while (try_alpha(lo, s)) {
        hi = lo;
        first = s;
        lo /= 2.0;
        if (lo < 1e-12) break;
      }
    } else {
      lo = hi;
      hi = 2.0;
      while (!try_alpha(hi, s)) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) throw InfeasibleError("design: no feasible initialization found (binding block '" +
                                             s.program.blocks[std::max(0, s.solution.binding_block)].name + "')");
      }
      first = s;
    }
    for (int k = 0; k < 8 && lo > 0.0; ++k) {
      const double mid = std::sqrt(lo * hi);
      if (try_alpha(mid, s)) {
        hi = mid;
        first = s;
      } else {
        lo = mid;
      }
    }
    res.alpha_init = hi;
    U_tilde = equal_channel0(nu, L, hi);
    gamma_bar = kInitEnergyFactor * L * hi * hi;
    have_first = true;
  }

  // Solve, move the linearization point, repeat.
  for (int k = 1; k <= spec.max_outer; ++k) {
    ExplorationSolution s = (k == 1 && have_first) ? first
                                                   : solve_exploration_sdp(spec, consts, res.V_hat, U_tilde, gamma_bar);
    if (!s.ok()) {
      if (k == 1) {
        std::string msg = "design: exploration SDP infeasible (" + to_string(s.solution.status);
        if (s.solution.binding_block >= 0)
          msg += ", binding block '" + s.program.blocks[static_cast<std::size_t>(s.solution.binding_block)].name + "'";
        throw InfeasibleError(msg + ")");
      }
      res.iterations.push_back(record_of(s, gamma_bar));
      res.note = "iteration " + std::to_string(k) + " failed (" + to_string(s.solution.status) +
                 "); returning the last certified iterate";
      break;
    }
    const double prev = res.iterations.empty() ? std::numeric_limits<double>::quiet_NaN() : res.gamma_e;
    res.iterations.push_back(record_of(s, gamma_bar));
    res.U_e = s.U_e;
    res.gamma_e = s.gamma_e;
    res.tau = s.tau;
    res.certified = true;
    res.U_tilde_final = U_tilde;
    res.gamma_bar_final = gamma_bar;

    if (k > 1 && std::abs(prev - s.gamma_e) <= spec.tol * std::abs(prev)) {
      res.converged = true;
      break;
    }
    U_tilde = s.U_e.amplitudes;
    gamma_bar = s.gamma_e * s.gamma_e;
    if (!(gamma_bar > 0.0)) {
      res.converged = true;
      break;
    }
  }
  return res;
}

nlohmann::json design_to_json(const DesignResult& r, const DesignSpec& spec) {
  using nlohmann::json;
  json j;
  j["schema_version"] = 1;
  j["T"] = spec.grid.T();
  j["frequencies"] = spec.grid.omegas();
  j["gamma_e"] = r.gamma_e;
  j["gamma_e_sq"] = r.gamma_e * r.gamma_e;
  j["tau"] = r.tau;
  j["certified"] = r.certified;
  j["converged"] = r.converged;
  if (!r.note.empty()) j["note"] = r.note;
  json amps = json::array();
  for (int i = 0; i < r.U_e.L(); ++i) {
    const Vector a = r.U_e.amplitudes.col(i);
    amps.push_back({{"omega", spec.grid.omega(i)}, {"amplitude", std::vector<double>(a.data(), a.data() + a.size())}});
  }
  j["amplitudes"] = amps;
  json trace = json::array();
  for (const IterationRecord& it : r.iterations)
    trace.push_back({{"gamma_e", it.gamma_e},
                     {"tau", it.tau},
                     {"gamma_bar", it.gamma_bar},
                     {"status", to_string(it.status)},
                     {"margins", it.margins},
                     {"newton_steps", it.newton_steps}});
  j["iterations"] = trace;
  j["initialization"] = {{"alpha", r.alpha_init}, {"solves", r.init_solves}};
  json ut = json::array();
  for (Eigen::Index i = 0; i < r.U_tilde_final.cols(); ++i) {
    const Vector a = r.U_tilde_final.col(i);
    ut.push_back(std::vector<double>(a.data(), a.data() + a.size()));
  }
  j["final_lmi"] = {{"U_tilde", ut}, {"gamma_bar", r.gamma_bar_final}};
  j["constants"] = constants_to_json(r.consts);
  return j;
}

}  // namespace texplore
