#include "texplore/bounds.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace texplore {

namespace {

constexpr int kExplicitSumTerms = 512;

double default_rho(const Matrix& A, const EnvelopeOptions& opts) {
  const double sr = spectral_radius(A);
  if (!(sr < 1.0)) throw StabilityError("decay envelope: spectral radius of A is not below 1");
  if (!(opts.rho_ratio > 0.0 && opts.rho_ratio < 1.0)) throw DomainError("decay envelope: rho_ratio must lie in (0, 1)");
  return std::max(opts.rho_min, sr + opts.rho_ratio * (1.0 - sr));
}

}  // namespace

DecayEnvelope envelope_at_rho(const Matrix& A, double rho, const EnvelopeOptions& opts) {
  if (!(rho > 0.0 && rho < 1.0)) throw DomainError("decay envelope: rho must lie in (0, 1)");
  if (A.rows() != A.cols()) throw DimensionError("decay envelope: A must be square");
  DecayEnvelope env;
  env.rho = rho;
  env.C = 1.0;
  const Matrix Ar = A / rho;
  Matrix P = Matrix::Identity(A.rows(), A.cols());
  int K = std::max(1, opts.K_check);
  int k = 0;
  while (true) {
    while (k < K) {
      ++k;
      P = Ar * P;
      const double n = spectral_norm(P);
      env.C = std::max(env.C, n);
      if (env.k_certify == 0 && n <= 1.0) env.k_certify = k;
    }
    if (env.k_certify > 0) break;
    if (K >= opts.K_max) throw NumericError("decay envelope: no tail certificate within K_max powers");
    K = std::min(2 * K, opts.K_max);
  }
  env.K_checked = k;
  return env;
}

DecayEnvelope fit_decay_envelope(const Matrix& A, const EnvelopeOptions& opts) {
  return envelope_at_rho(A, default_rho(A, opts), opts);
}

DecayEnvelope common_envelope(const std::vector<Matrix>& As, const EnvelopeOptions& opts) {
  if (As.empty()) throw DimensionError("common_envelope: no matrices");
  double rho = 0.0;
  for (const Matrix& A : As) rho = std::max(rho, default_rho(A, opts));
  DecayEnvelope env;
  env.rho = rho;
  for (const Matrix& A : As) {
    const DecayEnvelope e = envelope_at_rho(A, rho, opts);
    env.C = std::max(env.C, e.C);
    env.K_checked = std::max(env.K_checked, e.K_checked);
    env.k_certify = std::max(env.k_certify, e.k_certify);
  }
  return env;
}

double transient_gain(const DecayEnvelope& env, double normB) {
  return normB * env.C * env.rho / ((1.0 - env.rho) * (1.0 - env.rho));
}

double transient_gamma_u(const DecayEnvelope& env, double normB, int L, double T) {
  if (!(T >= 1.0)) throw DomainError("transient_gamma_u: T must be >= 1");
  const double g = transient_gain(env, normB);
  return 4.0 * L / T * g * g;
}

double disturbance_gamma_w(double sigma_w, double T, int nx, double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("disturbance_gamma_w: delta must lie in (0, 1]");
  return sigma_w * sigma_w * ((1.0 + std::log(4.0)) * T * nx + 4.0 * std::log(1.0 / delta));
}

double disturbance_Gamma_w_coeff(double normAw, double gamma_w, int L, double T) {
  if (normAw < 0.0 || gamma_w < 0.0) throw DomainError("disturbance_Gamma_w: inputs must be nonnegative");
  return static_cast<double>(L) / T * normAw * normAw * gamma_w;
}

Matrix disturbance_Gamma_w(double normAw, double gamma_w, int L, double T, int nphi) {
  return disturbance_Gamma_w_coeff(normAw, gamma_w, L, T) * Matrix::Identity(nphi, nphi);
}

double logdet_upper_bound(double normAw, double gamma_w, double normAu, double gamma_e_sq, double lambda, double T,
                          int ntheta) {
  const double arg = 2.0 * T * normAw * normAw * gamma_w + 2.0 * T * T * (normAu * normAu + 1.0) * gamma_e_sq + lambda;
  if (!(arg > 0.0)) throw DomainError("logdet_upper_bound: nonpositive log argument");
  return ntheta * std::log(arg);
}

double C3Function::operator()(double gamma_sq) const {
  if (sigma_w == 0.0) return 0.0;
  const double a1 = 2.0 * T * normAw * normAw * gamma_w;
  const double a2 = 2.0 * T * T * (normAu * normAu + 1.0) * gamma_sq + lambda;
  if (!(a1 > 0.0) || !(a2 > 0.0)) throw DomainError("C3: nonpositive log argument; constant set infeasible");
  return 8.0 * sigma_w * sigma_w * ntheta * (std::log(a1) + std::log(a2));
}

C2C3 constants_C2_C3(double C1, double lambda, double theta_bar, double sigma_w, int ntheta, double T, double normAw,
                     double gamma_w, double normAu) {
  C2C3 out;
  out.C2 = 2.0 * C1 + 2.0 * lambda * theta_bar * theta_bar;
  out.C3 = C3Function{sigma_w, ntheta, T, normAw, gamma_w, normAu, lambda};
  if (sigma_w != 0.0) out.C3(0.0);  // surfaces a domain error early
  return out;
}

OperatorNorms certified_operator_norms(const Matrix& A, const Matrix& B, double T, const DecayEnvelope& env) {
  if (!(T >= 1.0)) throw DomainError("operator norms: T must be >= 1");
  const double K = std::min(T, static_cast<double>(kExplicitSumTerms));
  const int Ki = static_cast<int>(K);
  OperatorNorms out;
  Matrix Ak = Matrix::Identity(A.rows(), A.cols());
  for (int k = 0; k < Ki; ++k) {
    out.normAw += spectral_norm(Ak);
    out.normAu += spectral_norm(Matrix(Ak * B));
    Ak = A * Ak;
  }
  if (T > K) {
    // sum_{k=K}^{T-1} C rho^k = C rho^K (1 - rho^{T-K}) / (1 - rho)
    const double tail = env.C * std::pow(env.rho, K) * -std::expm1((T - K) * std::log(env.rho)) / (1.0 - env.rho);
    out.normAw += tail;
    out.normAu += spectral_norm(B) * tail;
  }
  return out;
}

OperatorNorms operator_norms(const Matrix& A, const Matrix& B, double T, const DecayEnvelope& env) {
  const double size = T * static_cast<double>(std::max(A.rows(), B.cols()));
  if (size <= static_cast<double>(kExactNormBudget)) {
    const ToeplitzOperators ops = build_toeplitz_operators(SystemModel(A, B, 0.0), static_cast<std::int64_t>(T));
    OperatorNorms out;
    out.normAu = Eigen::BDCSVD<Matrix>(ops.Au).singularValues()(0);
    out.normAw = Eigen::BDCSVD<Matrix>(ops.Aw).singularValues()(0);
    out.exact = true;
    return out;
  }
  return certified_operator_norms(A, B, T, env);
}

int scenario_sample_count(double delta, double beta, int d) {
  if (!(delta > 0.0 && delta < 1.0) || !(beta > 0.0 && beta < 1.0))
    throw DomainError("scenario: delta and beta must lie in (0, 1)");
  if (d < 0) throw DomainError("scenario: d must be nonnegative");
  return static_cast<int>(std::ceil(2.0 / delta * (std::log(1.0 / beta) + d)));
}

ParameterVector sample_prior(const PriorSet& prior, std::mt19937_64& rng, bool boundary) {
  const int nx = prior.theta_hat0.nx();
  const int nphi = prior.theta_hat0.nphi();
  const int n = prior.theta_hat0.ntheta();
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(n);
  double norm = 0.0;
  while (norm == 0.0) {
    for (int i = 0; i < n; ++i) z(i) = normal(rng);
    norm = z.norm();
  }
  double r = 1.0;
  if (!boundary) r = std::pow(std::uniform_real_distribution<double>(0.0, 1.0)(rng), 1.0 / n);
  // tr(E D0 E^T) = ||Z||_F^2 for E = Z D0^{-1/2}.
  const Matrix E = unvec(z * (r / norm), nx, nphi) * inv_sqrt_spd(prior.D0);
  return ParameterVector(prior.theta_hat0.theta() + Eigen::Map<const Vector>(E.data(), E.size()), nx,
                         prior.theta_hat0.nu());
}

ScenarioConstants scenario_constants(const PriorSet& prior, double delta, double beta, double T, std::uint64_t seed,
                                     const EnvelopeOptions& opts) {
  ScenarioConstants sc;
  sc.seed = seed;
  sc.n_samples = scenario_sample_count(delta, beta);
  if (!is_schur_stable(prior.theta_hat0.A())) throw StabilityError("scenario: prior center is not Schur stable");

  std::mt19937_64 rng(mix_seed(seed, 1));
  std::vector<Matrix> As{prior.theta_hat0.A()};
  std::vector<Matrix> Bs{prior.theta_hat0.B()};
  const int cap = 100 * sc.n_samples;
  while (static_cast<int>(As.size()) < sc.n_samples) {
    if (sc.attempts >= cap) throw InfeasibleError("scenario: too many unstable prior samples");
    ++sc.attempts;
    const ParameterVector th = sample_prior(prior, rng);
    Matrix A = th.A();
    if (!is_schur_stable(A)) continue;
    As.push_back(std::move(A));
    Bs.push_back(th.B());
  }

  sc.envelope = common_envelope(As, opts);
  sc.norms_exact = true;
  for (std::size_t i = 0; i < As.size(); ++i) {
    sc.Bbar = std::max(sc.Bbar, spectral_norm(Bs[i]));
    const OperatorNorms on = operator_norms(As[i], Bs[i], T, sc.envelope);
    sc.norms_exact = sc.norms_exact && on.exact;
    sc.gamma_Aw = std::max(sc.gamma_Aw, on.normAw * on.normAw);
    sc.gamma_Au = std::max(sc.gamma_Au, on.normAu * on.normAu);
  }
  sc.gamma_G = transient_gain(sc.envelope, sc.Bbar);
  return sc;
}

GammaVShape parse_gammaV_shape(const std::string& name) {
  if (name == "identity") return GammaVShape::identity;
  if (name == "nominal") return GammaVShape::nominal;
  throw ConfigError("unknown gammaV_shape '" + name + "' (expected identity or nominal)");
}

std::string to_string(GammaVShape shape) { return shape == GammaVShape::identity ? "identity" : "nominal"; }

GammaVResult gamma_V_tilde(const PriorSet& prior, const FrequencyGrid& grid, int n_samples, double margin,
                           std::uint64_t seed, GammaVShape shape) {
  if (n_samples < 1) throw DomainError("gamma_V_tilde: n_samples must be >= 1");
  if (!(margin >= 0.0)) throw DomainError("gamma_V_tilde: margin must be nonnegative");
  const Matrix A0 = prior.theta_hat0.A();
  const Matrix B0 = prior.theta_hat0.B();
  if (!is_schur_stable(A0)) throw StabilityError("gamma_V_tilde: prior center is not Schur stable");
  const CMatrix Vhat = transfer_samples(A0, B0, grid).V;
  const int nphi = prior.theta_hat0.nphi();

  std::mt19937_64 rng(mix_seed(seed, 2));
  std::vector<CMatrix> outer;
  int attempts = 0;
  while (static_cast<int>(outer.size()) < n_samples) {
    if (attempts >= 100 * n_samples) throw InfeasibleError("gamma_V_tilde: too many unstable prior samples");
    ++attempts;
    const bool boundary = outer.size() % 2 == 0;
    const ParameterVector th = sample_prior(prior, rng, boundary);
    const Matrix A = th.A();
    if (!is_schur_stable(A)) continue;
    const CMatrix Vt = transfer_samples(A, th.B(), grid).V - Vhat;
    outer.push_back(Vt * Vt.adjoint());
  }

  GammaVResult res;
  res.n_samples = n_samples;
  res.shape = shape;
  CMatrix Wn;
  CMatrix G;
  if (shape == GammaVShape::nominal) {
    G = Vhat * Vhat.adjoint();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (G + G.adjoint()));
    const Vector& ev = es.eigenvalues();
    if (ev.minCoeff() <= 1e-12 * std::max(ev.maxCoeff(), 1e-300)) {
      res.shape = GammaVShape::identity;
    } else {
      Wn = es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
    }
  }
  for (const CMatrix& O : outer) {
    const double v = res.shape == GammaVShape::identity ? max_eig_herm(O) : max_eig_herm(Wn * O * Wn);
    res.peak = std::max(res.peak, v);
  }
  const double scale = (1.0 + margin) * res.peak;
  res.Gamma = res.shape == GammaVShape::identity ? CMatrix(scale * CMatrix::Identity(nphi, nphi))
                                                 : CMatrix(scale * 0.5 * (G + G.adjoint()));
  return res;
}

double excitation_lower_bound_check(const Matrix& gram_over_T, const SpectralDecomposition& decomp, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("excitation check: eps must lie in (0, 1)");
  const CMatrix H = gram_over_T.cast<Complex>() - (1.0 - eps) * decomp.Phi_ud * decomp.Phi_ud.adjoint() +
                    (2.0 * (1.0 - eps) / eps) *
                        (decomp.Phi_ut * decomp.Phi_ut.adjoint() + decomp.Phi_w * decomp.Phi_w.adjoint());
  return min_eig_herm(H);
}

Matrix BoundConstants::Gamma_u(double gamma_sq) const {
  return Gamma_u_coeff * gamma_sq * Matrix::Identity(nphi(), nphi());
}

Matrix BoundConstants::Gamma_w() const { return Gamma_w_coeff * Matrix::Identity(nphi(), nphi()); }

BoundConstants compute_bound_constants(const PriorSet& prior, const FrequencyGrid& grid, double sigma_w, double lambda,
                                       double delta, const BoundOptions& opts) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("constants: delta must lie in (0, 1)");
  if (!(lambda > 0.0)) throw DomainError("constants: lambda must be positive");
  if (!(sigma_w >= 0.0)) throw DomainError("constants: sigma_w must be nonnegative");
  BoundConstants c;
  c.T = static_cast<double>(grid.T());
  c.L = grid.L();
  c.nx = prior.theta_hat0.nx();
  c.nu = prior.theta_hat0.nu();
  c.sigma_w = sigma_w;
  c.lambda = lambda;
  c.delta = delta;
  c.theta_bar = theta_bound(prior);
  c.C1 = constant_C1(sigma_w, delta, lambda, c.nx, c.ntheta());
  c.gamma_w = disturbance_gamma_w(sigma_w, c.T, c.nx, delta);
  c.scenario = scenario_constants(prior, delta, opts.beta, c.T, opts.seed, opts.envelope);
  c.envelope = c.scenario.envelope;
  c.norm_Au = std::sqrt(c.scenario.gamma_Au);
  c.norm_Aw = std::sqrt(c.scenario.gamma_Aw);
  const C2C3 cc = constants_C2_C3(c.C1, lambda, c.theta_bar, sigma_w, c.ntheta(), c.T, c.norm_Aw, c.gamma_w, c.norm_Au);
  c.C2 = cc.C2;
  c.C3 = cc.C3;
  c.G_tr_bound = c.scenario.gamma_G;
  c.Gamma_u_coeff = 4.0 * c.L / c.T * c.G_tr_bound * c.G_tr_bound;
  c.Gamma_w_coeff = disturbance_Gamma_w_coeff(c.norm_Aw, c.gamma_w, c.L, c.T);
  c.Gamma_V = gamma_V_tilde(prior, grid, opts.gammaV_samples, opts.gammaV_margin, opts.seed, opts.gammaV_shape);
  return c;
}

nlohmann::json constants_to_json(const BoundConstants& c) {
  using nlohmann::json;
  json j;
  j["schema_version"] = 1;
  j["T"] = c.T;
  j["L"] = c.L;
  j["n_x"] = c.nx;
  j["n_u"] = c.nu;
  j["sigma_w"] = c.sigma_w;
  j["lambda"] = c.lambda;
  j["delta"] = c.delta;
  j["analytic"] = {{"theta_bar", c.theta_bar}, {"C1", c.C1},           {"C2", c.C2},
                   {"gamma_w", c.gamma_w},     {"C3_at_zero", c.C3(0.0)}};
  j["scenario"] = {{"n_samples", c.scenario.n_samples},
                   {"attempts", c.scenario.attempts},
                   {"seed", c.scenario.seed},
                   {"Bbar", c.scenario.Bbar},
                   {"gamma_G", c.scenario.gamma_G},
                   {"gamma_Aw", c.scenario.gamma_Aw},
                   {"gamma_Au", c.scenario.gamma_Au},
                   {"norms", c.scenario.norms_exact ? "exact" : "certified_bound"},
                   {"envelope",
                    {{"C", c.envelope.C},
                     {"rho", c.envelope.rho},
                     {"K_checked", c.envelope.K_checked},
                     {"k_certify", c.envelope.k_certify}}}};
  j["derived"] = {{"G_tr_bound", c.G_tr_bound},
                  {"norm_Au", c.norm_Au},
                  {"norm_Aw", c.norm_Aw},
                  {"Gamma_u_coeff", c.Gamma_u_coeff},
                  {"Gamma_w_coeff", c.Gamma_w_coeff}};
  json re = json::array();
  json im = json::array();
  for (Eigen::Index r = 0; r < c.Gamma_V.Gamma.rows(); ++r) {
    json rr = json::array();
    json ii = json::array();
    for (Eigen::Index k = 0; k < c.Gamma_V.Gamma.cols(); ++k) {
      rr.push_back(c.Gamma_V.Gamma(r, k).real());
      ii.push_back(c.Gamma_V.Gamma(r, k).imag());
    }
    re.push_back(rr);
    im.push_back(ii);
  }
  j["Gamma_V_tilde"] = {{"shape", to_string(c.Gamma_V.shape)},
                        {"peak", c.Gamma_V.peak},
                        {"n_samples", c.Gamma_V.n_samples},
                        {"real", re},
                        {"imag", im}};
  return j;
}

}  // namespace texplore
