#pragma once

// Constants feeding the exploration LMIs: decay envelope, transient and
// disturbance bounds, logdet bound, C2/C3, scenario-sampled system constants
// over the prior set, the transfer-sample uncertainty bound, and executable
// forms of the excitation inequalities.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "texplore/estimation.hpp"
#include "texplore/spectral.hpp"

namespace texplore {

struct DecayEnvelope {
  double C = 1.0;
  double rho = 0.5;
  int K_checked = 0;   // powers checked explicitly
  int k_certify = 0;   // some k <= K_checked with ||A^k|| <= rho^k
};

struct EnvelopeOptions {
  double rho_ratio = 0.5;  // rho = sr + rho_ratio * (1 - sr)
  double rho_min = 0.5;    // the transient constant below is only valid for rho >= 1/2
  int K_check = 200;
  int K_max = 1 << 16;
};

/// ||A^k|| <= C rho^k for all k >= 0. Powers are checked up to K_check; the
/// tail follows from submultiplicativity once ||A^k0|| <= rho^k0 for some k0.
DecayEnvelope fit_decay_envelope(const Matrix& A, const EnvelopeOptions& opts = {});

/// Envelope for a fixed rho; throws NumericError if no tail certificate is found.
DecayEnvelope envelope_at_rho(const Matrix& A, double rho, const EnvelopeOptions& opts = {});

/// One (C, rho) valid for every matrix in the list.
DecayEnvelope common_envelope(const std::vector<Matrix>& As, const EnvelopeOptions& opts = {});

/// ||B|| C rho / (1 - rho)^2.
double transient_gain(const DecayEnvelope& env, double normB);

/// Coefficient c with Gamma_u(gamma^2) = c gamma^2 I: (4L/T) (||B|| C rho / (1-rho)^2)^2.
double transient_gamma_u(const DecayEnvelope& env, double normB, int L, double T);

/// gamma_w = sigma_w^2 ((1 + log 4) T n_x + 4 log(1/delta)).
double disturbance_gamma_w(double sigma_w, double T, int nx, double delta);

/// Coefficient of Gamma_w = (L/T) ||A_w||^2 gamma_w I.
double disturbance_Gamma_w_coeff(double normAw, double gamma_w, int L, double T);
Matrix disturbance_Gamma_w(double normAw, double gamma_w, int L, double T, int nphi);

/// n_theta log(2 T ||A_w||^2 gamma_w + 2 T^2 (||A_u||^2 + 1) gamma_e^2 + lambda).
double logdet_upper_bound(double normAw, double gamma_w, double normAu, double gamma_e_sq, double lambda, double T,
                          int ntheta);

/// C3(gamma^2) = 8 sigma_w^2 n_theta [log(2T||A_w||^2 gamma_w) + log(2T^2(||A_u||^2+1) gamma^2 + lambda)].
struct C3Function {
  double sigma_w = 0.0;
  int ntheta = 0;
  double T = 1.0;
  double normAw = 0.0;
  double gamma_w = 0.0;
  double normAu = 0.0;
  double lambda = 1.0;

  double operator()(double gamma_sq) const;
};

struct C2C3 {
  double C2 = 0.0;
  C3Function C3;
};

C2C3 constants_C2_C3(double C1, double lambda, double theta_bar, double sigma_w, int ntheta, double T, double normAw,
                     double gamma_w, double normAu);

/// Norms of the finite-horizon response operators (or certified upper bounds).
struct OperatorNorms {
  double normAu = 0.0;
  double normAw = 0.0;
  bool exact = false;  // true when computed from the explicit operators
};

/// Explicit operators are used when T * max(n_x, n_u) <= kExactNormBudget.
inline constexpr std::int64_t kExactNormBudget = 256;

/// ||A_w|| <= sum_{k<T} ||A^k||, ||A_u|| <= sum_{k<T} ||A^k B||, with the
/// terms beyond the explicitly summed ones bounded through the envelope.
OperatorNorms certified_operator_norms(const Matrix& A, const Matrix& B, double T, const DecayEnvelope& env);

/// Exact norms for small T, certified bounds otherwise.
OperatorNorms operator_norms(const Matrix& A, const Matrix& B, double T, const DecayEnvelope& env);

/// Number of scenario samples ceil((2/delta)(ln(1/beta) + d)).
int scenario_sample_count(double delta, double beta, int d = 1);

/// Uniform sample from the prior ellipsoid; on the boundary when `boundary`.
ParameterVector sample_prior(const PriorSet& prior, std::mt19937_64& rng, bool boundary = false);

struct ScenarioConstants {
  int n_samples = 0;
  int attempts = 0;
  std::uint64_t seed = 0;
  double Bbar = 0.0;      // max ||B_i||
  double gamma_G = 0.0;   // Bbar C rho / (1 - rho)^2
  double gamma_Aw = 0.0;  // max ||A_w,i||^2
  double gamma_Au = 0.0;  // max ||A_u,i||^2
  bool norms_exact = false;
  DecayEnvelope envelope;
};

/// Scenario bounds over N_s prior samples; the prior center is sample 0 and
/// unstable samples are redrawn (at most 100 N_s attempts).
ScenarioConstants scenario_constants(const PriorSet& prior, double delta, double beta, double T, std::uint64_t seed,
                                     const EnvelopeOptions& opts = {});

enum class GammaVShape { identity, nominal };

GammaVShape parse_gammaV_shape(const std::string& name);
std::string to_string(GammaVShape shape);

struct GammaVResult {
  CMatrix Gamma;             // n_phi x n_phi Hermitian PSD
  double peak = 0.0;         // max_i eigmax(V~_i V~_i^H), or the whitened peak for the nominal shape
  int n_samples = 0;
  GammaVShape shape = GammaVShape::nominal;  // shape actually used
};

/// Bound Gamma with V~ V~^H <= Gamma for sampled prior parameters, V~ = V(theta) - V_hat.
/// identity: (1 + margin) max_i eigmax(V~_i V~_i^H) I.
/// nominal:  (1 + margin) kappa V_hat V_hat^H, kappa = max_i eigmax(W V~_i V~_i^H W),
///           W = (V_hat V_hat^H)^{-1/2}; falls back to identity if V_hat V_hat^H is singular.
GammaVResult gamma_V_tilde(const PriorSet& prior, const FrequencyGrid& grid, int n_samples, double margin,
                           std::uint64_t seed, GammaVShape shape = GammaVShape::nominal);

/// Hermitian eigmin of (1/T) Phi Phi^T - (1-eps) Phi_ud Phi_ud^H + (2(1-eps)/eps)(Phi_ut Phi_ut^H + Phi_w Phi_w^H).
double excitation_lower_bound_check(const Matrix& gram_over_T, const SpectralDecomposition& decomp, double eps);

struct BoundOptions {
  double beta = 0.01;
  int gammaV_samples = 500;
  double gammaV_margin = 0.2;
  GammaVShape gammaV_shape = GammaVShape::nominal;
  std::uint64_t seed = 0;
  EnvelopeOptions envelope;
};

struct BoundConstants {
  double T = 0.0;
  int L = 0;
  int nx = 0;
  int nu = 0;
  double sigma_w = 0.0;
  double lambda = 1.0;
  double delta = 0.05;
  double theta_bar = 0.0;
  double C1 = 0.0;
  double C2 = 0.0;
  C3Function C3;
  double gamma_w = 0.0;
  double G_tr_bound = 0.0;
  double norm_Au = 0.0;
  double norm_Aw = 0.0;
  double Gamma_u_coeff = 0.0;
  double Gamma_w_coeff = 0.0;
  GammaVResult Gamma_V;
  ScenarioConstants scenario;
  DecayEnvelope envelope;

  int nphi() const { return nx + nu; }
  int ntheta() const { return nx * nphi(); }
  Matrix Gamma_u(double gamma_sq) const;
  Matrix Gamma_w() const;
};

BoundConstants compute_bound_constants(const PriorSet& prior, const FrequencyGrid& grid, double sigma_w, double lambda,
                                       double delta, const BoundOptions& opts = {});

nlohmann::json constants_to_json(const BoundConstants& c);

}  // namespace texplore
