#pragma once

// Randomized matrix-inequality suites. Each instance yields a margin
// normalized by (1 + scale); an inequality holds when the margin is >= -1e-9.

#include <cstdint>
#include <string>

namespace suites {

inline constexpr double kMarginTol = 1e-9;

struct SuiteResult {
  std::string name;
  int instances = 0;
  int premises_met = 0;  // instances where the implication premise held
  double worst = 0.0;    // smallest normalized margin over instances with premises met

  bool pass() const { return premises_met > 0 && worst >= -kMarginTol; }
};

/// (R^{1/2} + lambda^{1/2} theta_bar)^2 <= 2 C1 + 8 sigma^2 logdet + 2 lambda theta_bar^2.
SuiteResult log_radius_bound(int n, std::uint64_t seed);

/// Phi Phi^T / T against the design, transient and disturbance line parts.
SuiteResult excitation_lower_bound(int n, std::uint64_t seed);

/// Transient and disturbance line covariances against Gamma_u and the
/// deterministic form of Gamma_w (gamma_w replaced by ||W||^2).
SuiteResult line_covariance_bounds(int n, std::uint64_t seed);

/// log det of the regularized information matrix against its upper bound.
SuiteResult logdet_bound(int n, std::uint64_t seed);

/// U Ut^T + Ut U^T - Ut Ut^T <= U U^T per frequency.
SuiteResult convex_relaxation(int n, std::uint64_t seed);

/// S_exp >= 0 implies the nominal condition for every V in the uncertainty set.
SuiteResult s_lemma_direction(int n, std::uint64_t seed);

/// convex condition => data condition; data condition and containment => goal.
SuiteResult sufficiency_chain(int n, std::uint64_t seed);

}  // namespace suites
