#include "texplore/sdpsolver.hpp"

#include <lapacke.h>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace texplore {

Matrix LmiBlock::evaluate(const Vector& x) const {
  if (x.size() != static_cast<Eigen::Index>(Fi.size())) throw DimensionError("LmiBlock: decision vector length");
  Matrix M = F0;
  for (std::size_t i = 0; i < Fi.size(); ++i)
    if (x(static_cast<Eigen::Index>(i)) != 0.0) M += x(static_cast<Eigen::Index>(i)) * Fi[i];
  return M;
}

namespace {

void require_symmetric(const Matrix& M, const std::string& what) {
  if (M.rows() != M.cols()) throw DimensionError(what + ": not square");
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + M.cwiseAbs().maxCoeff()))
    throw SymmetryError(what + ": not symmetric");
}

}  // namespace

void ConicProgram::validate() const {
  const std::size_t n = static_cast<std::size_t>(c.size());
  if (!var_names.empty() && var_names.size() != n) throw DimensionError("program: var_names length");
  for (const LmiBlock& b : blocks) {
    if (b.Fi.size() != n) throw DimensionError("program: block '" + b.name + "' has wrong number of coefficients");
    require_symmetric(b.F0, "block '" + b.name + "' F0");
    for (const Matrix& F : b.Fi) {
      if (F.rows() != b.F0.rows() || F.cols() != b.F0.cols())
        throw DimensionError("program: block '" + b.name + "' coefficient size");
      require_symmetric(F, "block '" + b.name + "' coefficient");
    }
  }
  if (!c.allFinite()) throw DataError("program: non-finite objective");
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::numerical: return "numerical";
  }
  return "numerical";
}

Matrix hermitian_embed(const CMatrix& H) {
  if (H.rows() != H.cols()) throw DimensionError("hermitian_embed: matrix not square");
  if (H.size() > 0 && (H - H.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + H.cwiseAbs().maxCoeff()))
    throw SymmetryError("hermitian_embed: matrix not Hermitian");
  const Eigen::Index m = H.rows();
  const Matrix Re = 0.5 * (H.real() + H.real().transpose());
  const Matrix Im = 0.5 * (H.imag() - H.imag().transpose());
  Matrix E(2 * m, 2 * m);
  E << Re, -Im, Im, Re;
  return E;
}

namespace {

class Barrier {
 public:
  Barrier(const ConicProgram& p, const SolverOptions& o) : prog_(p), opts_(o) {
    const int n = prog_.n_vars();
    active_.resize(prog_.blocks.size());
    for (std::size_t b = 0; b < prog_.blocks.size(); ++b)
      for (int i = 0; i < n; ++i)
        if (!prog_.blocks[b].Fi[static_cast<std::size_t>(i)].isZero(0.0)) active_[b].push_back(i);
    for (const LmiBlock& b : prog_.blocks) m_total_ += b.size();
  }

  int m_total() const { return m_total_; }

  /// t c^T x - sum_b log det F_b(x); +inf outside the interior.
  double value(const Vector& x, double t) const {
    double v = t * prog_.c.dot(x);
    for (const LmiBlock& b : prog_.blocks) {
      Eigen::LLT<Matrix> llt(b.evaluate(x));
      if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
      const Matrix& L = llt.matrixLLT();
      for (Eigen::Index k = 0; k < L.rows(); ++k) {
        if (!(L(k, k) > 0.0)) return std::numeric_limits<double>::infinity();
        v -= 2.0 * std::log(L(k, k));
      }
    }
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  }

  bool strictly_feasible(const Vector& x) const {
    for (const LmiBlock& b : prog_.blocks) {
      Eigen::LLT<Matrix> llt(b.evaluate(x));
      if (llt.info() != Eigen::Success) return false;
    }
    return true;
  }

  /// Gradient and Hessian of the barrier objective; false outside the interior.
  bool derivatives(const Vector& x, double t, Vector& g, Matrix& H, std::vector<Eigen::LLT<Matrix>>& factors) const {
    const int n = prog_.n_vars();
    g = t * prog_.c;
    H = Matrix::Zero(n, n);
    factors.clear();
    for (std::size_t b = 0; b < prog_.blocks.size(); ++b) {
      const LmiBlock& blk = prog_.blocks[b];
      factors.emplace_back(blk.evaluate(x));
      const Eigen::LLT<Matrix>& llt = factors.back();
      if (llt.info() != Eigen::Success) return false;
      const auto L = llt.matrixL();
      const std::vector<int>& act = active_[b];
      std::vector<Matrix> G(act.size());
      for (std::size_t a = 0; a < act.size(); ++a) {
        // G = L^{-1} F_i L^{-T}
        Matrix Y = L.solve(blk.Fi[static_cast<std::size_t>(act[a])]);
        G[a] = L.solve(Y.transpose());
        g(act[a]) -= G[a].trace();
      }
      for (std::size_t a = 0; a < act.size(); ++a)
        for (std::size_t c = a; c < act.size(); ++c) {
          const double h = G[a].cwiseProduct(G[c]).sum();
          H(act[a], act[c]) += h;
          if (c != a) H(act[c], act[a]) += h;
        }
    }
    return true;
  }

  /// Largest step keeping every block positive definite along dx.
  double max_step(const Vector& dx, const std::vector<Eigen::LLT<Matrix>>& factors) const {
    double amax = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < prog_.blocks.size(); ++b) {
      const LmiBlock& blk = prog_.blocks[b];
      Matrix D = Matrix::Zero(blk.size(), blk.size());
      for (int i : active_[b]) D += dx(i) * blk.Fi[static_cast<std::size_t>(i)];
      const auto L = factors[b].matrixL();
      Matrix Y = L.solve(D);
      Matrix M = L.solve(Y.transpose());
      const double lmin = min_eig_sym(M);
      if (lmin < 0.0) amax = std::min(amax, -1.0 / lmin);
    }
    return amax;
  }

 private:
  const ConicProgram& prog_;
  const SolverOptions& opts_;
  std::vector<std::vector<int>> active_;
  int m_total_ = 0;
};

/// Solves H dx = -g. A singular H arises when some combination of the F_i
/// vanishes; g is orthogonal to that nullspace, so the minimum-norm solution
// The path stops one decade inside the requested gap so that the reported
// optimum carries margin against the tolerance.
constexpr double kGapSafety = 0.1;

/// is the exact Newton step.
bool newton_direction(const Vector& g, const Matrix& H, Vector& dx) {
  const Eigen::Index n = g.size();
  Vector s(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (H(i, i) < 0.0 || !std::isfinite(H(i, i))) return false;
    s(i) = H(i, i) > 0.0 ? 1.0 / std::sqrt(H(i, i)) : 1.0;
  }
  const Matrix Hs = s.asDiagonal() * H * s.asDiagonal();
  const Vector rhs = -(s.asDiagonal() * g);
  Eigen::LLT<Matrix> llt(Hs);
  Vector y;
  if (llt.info() == Eigen::Success) {
    y = llt.solve(rhs);
  }
  if (llt.info() != Eigen::Success || !y.allFinite() || (Hs * y - rhs).norm() > 1e-8 * (1.0 + rhs.norm())) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Hs);
    if (es.info() != Eigen::Success) return false;
    const Vector ev = es.eigenvalues();
    const double top = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
    if (ev(0) < -1e-10 * top) return false;
    const Vector q = es.eigenvectors().transpose() * rhs;
    Vector z = Vector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i)
      if (ev(i) > 1e-12 * top) z(i) = q(i) / ev(i);
    y = es.eigenvectors() * z;
  }
  dx = s.asDiagonal() * y;
  return dx.allFinite();
}

struct PathResult {
  Vector x;
  SolveStatus status = SolveStatus::numerical;
  double t = 1.0;
  int newton_steps = 0;
  int outer = 0;
  std::vector<double> trace;
  bool stopped_early = false;
  std::string message;
};

/// Barrier path following from a strictly feasible x0. `early_stop` is
/// consulted after every Newton step.
PathResult follow_path(const ConicProgram& prog, const Vector& x0, const SolverOptions& opts,
                       const std::function<bool(const Vector&)>& early_stop) {
  Barrier bar(prog, opts);
  PathResult r;
  r.x = x0;
  r.t = 1.0 / opts.mu0;
  const double m = bar.m_total();
  Vector g;
  Matrix H;
  std::vector<Eigen::LLT<Matrix>> factors;
  Vector dx;

  for (r.outer = 1; r.outer <= opts.max_iters; ++r.outer) {
    bool centered = false;
    for (int it = 0; it < opts.max_newton; ++it) {
      if (!bar.derivatives(r.x, r.t, g, H, factors)) {
        r.status = SolveStatus::numerical;
        r.message = "iterate left the interior";
        return r;
      }
      if (!newton_direction(g, H, dx)) {
        r.status = SolveStatus::numerical;
        r.message = "Newton system not positive definite";
        return r;
      }
      const double dec = -g.dot(dx);
      if (dec <= 1e-12 * std::max(1.0, m) || !(dec > 0.0)) {
        centered = true;
        break;
      }
      const double f0 = bar.value(r.x, r.t);
      double alpha = std::min(1.0, 0.99 * bar.max_step(dx, factors));
      bool accepted = false;
      while (alpha > 1e-16) {
        const Vector xn = r.x + alpha * dx;
        const double f1 = bar.value(xn, r.t);
        if (f1 <= f0 + opts.armijo * alpha * g.dot(dx)) {
          r.x = xn;
          accepted = true;
          break;
        }
        alpha *= opts.backtrack;
      }
      ++r.newton_steps;
      if (!accepted) {
        // No decrease is representable in floating point: the iterate is as
        // centered as the arithmetic allows.
        centered = dec <= 1e-6 * std::max(1.0, m);
        if (!centered) {
          r.status = SolveStatus::numerical;
          r.message = "line search failed";
          return r;
        }
        break;
      }
      if (r.x.cwiseAbs().maxCoeff() > 1e15) {
        r.status = SolveStatus::numerical;
        r.message = "iterates diverge (objective unbounded below?)";
        return r;
      }
      if (early_stop && early_stop(r.x)) {
        r.stopped_early = true;
        r.status = SolveStatus::optimal;
        return r;
      }
    }
    const double obj = prog.c.dot(r.x);
    r.trace.push_back(obj);
    if (!centered && r.outer == opts.max_iters) break;
    if (m / r.t <= kGapSafety * opts.gap_tol * (1.0 + std::abs(obj))) {
      r.status = SolveStatus::optimal;
      return r;
    }
    r.t *= opts.mu_factor;
  }
  r.status = SolveStatus::max_iters;
  r.message = "iteration cap reached";
  return r;
}

double block_scale(const ConicProgram& prog) {
  double s = 0.0;
  for (const LmiBlock& b : prog.blocks) s = std::max(s, b.F0.cwiseAbs().maxCoeff());
  return s;
}

}  // namespace

Solution solve(const ConicProgram& prog, const SolverOptions& opts) {
  prog.validate();
  const int n = prog.n_vars();
  const int nb = static_cast<int>(prog.blocks.size());
  Solution sol;

  // Phase I: minimize s subject to F_b(x) + s I >= 0, s >= -1, |x_i| <= box.
  ConicProgram p1;
  p1.c = Vector::Zero(n + 1);
  p1.c(n) = 1.0;
  for (const LmiBlock& b : prog.blocks) {
    LmiBlock e;
    e.name = b.name;
    e.F0 = b.F0;
    e.Fi = b.Fi;
    e.Fi.push_back(Matrix::Identity(b.size(), b.size()));
    p1.blocks.push_back(std::move(e));
  }
  {
    LmiBlock lower;
    lower.name = "phase1_lower";
    lower.F0 = Matrix::Ones(1, 1);
    lower.Fi.assign(static_cast<std::size_t>(n + 1), Matrix::Zero(1, 1));
    lower.Fi[static_cast<std::size_t>(n)](0, 0) = 1.0;
    p1.blocks.push_back(std::move(lower));
    if (n > 0) {
      LmiBlock box;
      box.name = "phase1_box";
      box.F0 = opts.box * Matrix::Identity(2 * n, 2 * n);
      box.Fi.assign(static_cast<std::size_t>(n + 1), Matrix::Zero(2 * n, 2 * n));
      for (int i = 0; i < n; ++i) {
        box.Fi[static_cast<std::size_t>(i)](i, i) = -1.0;
        box.Fi[static_cast<std::size_t>(i)](n + i, n + i) = 1.0;
      }
      p1.blocks.push_back(std::move(box));
    }
  }
  Vector y0 = Vector::Zero(n + 1);
  double worst = 0.0;
  for (const LmiBlock& b : prog.blocks) worst = std::min(worst, min_eig_sym(b.F0));
  y0(n) = -worst + 1.0;

  Barrier main_bar(prog, opts);
  const auto interior = [&](const Vector& y) { return y(n) < 0.0 && main_bar.strictly_feasible(y.head(n)); };
  Vector x_start;
  if (main_bar.strictly_feasible(Vector::Zero(n))) {
    x_start = Vector::Zero(n);
    sol.phase1_value = worst;
  } else {
    const PathResult ph1 = follow_path(p1, y0, opts, interior);
    sol.newton_steps += ph1.newton_steps;
    sol.phase1_value = ph1.x(n);
    if (!ph1.stopped_early) {
      // Name the block with the most negative margin at the Phase-I optimum.
      double most = std::numeric_limits<double>::infinity();
      for (int b = 0; b < nb; ++b) {
        const double e = min_eig_sym(prog.blocks[static_cast<std::size_t>(b)].evaluate(ph1.x.head(n)));
        if (e < most) {
          most = e;
          sol.binding_block = b;
        }
      }
      sol.x = ph1.x.head(n);
      sol.objective = prog.c.dot(sol.x);
      for (const LmiBlock& b : prog.blocks) sol.min_eig_per_block.push_back(min_eig_sym(b.evaluate(sol.x)));
      const double tol = opts.feas_tol * (1.0 + block_scale(prog));
      if (ph1.status == SolveStatus::optimal && ph1.x(n) > tol) {
        sol.status = SolveStatus::infeasible;
        sol.message = "Phase I certifies infeasibility";
      } else if (ph1.status == SolveStatus::optimal) {
        sol.status = SolveStatus::numerical;
        sol.message = "feasible set has no strictly feasible point";
      } else {
        sol.status = ph1.status;
        sol.message = "Phase I: " + ph1.message;
      }
      if (sol.binding_block >= 0) sol.message += " (binding block '" + prog.blocks[sol.binding_block].name + "')";
      return sol;
    }
    x_start = ph1.x.head(n);
  }

  const PathResult ph2 = follow_path(prog, x_start, opts, nullptr);
  sol.x = ph2.x;
  sol.status = ph2.status;
  sol.message = ph2.message;
  sol.newton_steps += ph2.newton_steps;
  sol.outer_iterations = ph2.outer;
  sol.objective_trace = ph2.trace;
  sol.objective = prog.c.dot(sol.x);
  sol.duality_gap = main_bar.m_total() / ph2.t;
  for (const LmiBlock& b : prog.blocks) sol.min_eig_per_block.push_back(min_eig_sym(b.evaluate(sol.x)));
  return sol;
}

VerifyReport verify(const ConicProgram& prog, const Vector& x, double feas_tol) {
  prog.validate();
  VerifyReport rep;
  rep.feasible = true;
  rep.objective = prog.c.dot(x);
  for (const LmiBlock& b : prog.blocks) {
    Matrix M = b.evaluate(x);
    M = 0.5 * (M + M.transpose());
    const lapack_int m = static_cast<lapack_int>(M.rows());
    if (m == 0) {
      rep.min_eigs.push_back(0.0);
      continue;
    }
    std::vector<double> w(static_cast<std::size_t>(m));
    // Column-major copy; dsyev overwrites its input.
    Matrix A = M;
    const lapack_int info = LAPACKE_dsyev(LAPACK_COL_MAJOR, 'N', 'U', m, A.data(), m, w.data());
    if (info != 0) throw NumericError("verify: dsyev failed");
    const double lmin = w.front();
    const double norm = std::max(std::abs(w.front()), std::abs(w.back()));
    rep.min_eigs.push_back(lmin);
    if (lmin < -feas_tol * (1.0 + norm)) rep.feasible = false;
  }
  return rep;
}

nlohmann::json program_to_json(const ConicProgram& prog) {
  using nlohmann::json;
  const auto dense = [](const Matrix& M) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  json j;
  j["schema_version"] = 1;
  j["c"] = std::vector<double>(prog.c.data(), prog.c.data() + prog.c.size());
  j["var_names"] = prog.var_names;
  j["blocks"] = json::array();
  for (const LmiBlock& b : prog.blocks) {
    json jb;
    jb["name"] = b.name;
    jb["F0"] = dense(b.F0);
    jb["Fi"] = json::array();
    for (const Matrix& F : b.Fi) jb["Fi"].push_back(dense(F));
    j["blocks"].push_back(std::move(jb));
  }
  return j;
}

ConicProgram program_from_json(const nlohmann::json& j) {
  const auto dense = [](const nlohmann::json& rows) {
    if (!rows.is_array()) throw ConfigError("program: matrix must be an array of rows");
    const auto r = static_cast<Eigen::Index>(rows.size());
    const auto c = r == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.front().size());
    Matrix M(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
      if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != c)
        throw ConfigError("program: ragged matrix");
      for (Eigen::Index k = 0; k < c; ++k)
        M(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
    }
    return M;
  };
  try {
    ConicProgram p;
    const auto c = j.at("c").get<std::vector<double>>();
    p.c = Eigen::Map<const Vector>(c.data(), static_cast<Eigen::Index>(c.size()));
    if (j.contains("var_names")) p.var_names = j["var_names"].get<std::vector<std::string>>();
    for (const auto& jb : j.at("blocks")) {
      LmiBlock b;
      b.name = jb.value("name", "");
      b.F0 = dense(jb.at("F0"));
      for (const auto& F : jb.at("Fi")) b.Fi.push_back(dense(F));
      p.blocks.push_back(std::move(b));
    }
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("program: ") + e.what());
  }
}

}  // namespace texplore
