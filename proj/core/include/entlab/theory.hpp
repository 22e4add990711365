#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "entlab/rng.hpp"

namespace entlab {

// ---- group-baseline variance -------------------------------------------

struct VarianceCheck {
  int n = 0;
  long trials = 0;
  double var_a = 0.0;
  double var_r = 0.0;
  double ratio = 0.0;           // var_a / var_r, 0 when var_r = 0
  double expected_ratio = 0.0;  // 1 - 1/N
  double rel_error = 0.0;
};

/// Draws `trials` groups of N rewards and measures Var(R_i - mean R) against
/// Var(R), pooling all N positions of every group.
VarianceCheck group_variance_check(int n, const std::function<double(Rng&)>& sampler, long trials,
                                   std::uint64_t seed);

struct InflationCheck {
  int n = 0;
  double kappa = 0.0;
  long trials = 0;
  double var_a = 0.0;
  double var_a_kl = 0.0;
  double diff = 0.0;       // Var(A') - Var(A)
  double sigma_k2 = 0.0;   // empirical Var(K)
  double cov_sk = 0.0;     // empirical Cov(S, K)
  double predicted = 0.0;  // (1 - 1/N)(kappa^2 sigma_K^2 - 2 kappa Cov)
  double rel_error = 0.0;
};

/// Same as above with R' = S - kappa K folded into the reward.
InflationCheck kl_penalty_inflation_check(int n, double kappa,
                                          const std::function<std::pair<double, double>(Rng&)>& joint,
                                          long trials, std::uint64_t seed);

// ---- two-state renewal model -------------------------------------------

/// Reasoning (R) / verbatim (V) chain. Starts in V. Every step emits one
/// token and one detector reading; a V step then stops with hazard h or
/// enters R with probability `entry`, an R step returns to V with
/// probability q. The detector misses R with probability alpha and fires
/// falsely in V with probability beta.
struct TwoStateProcess {
  double q = 0.5;
  double h = 0.2;
  double entry = 0.3;
  double alpha = 0.0;
  double beta = 0.0;
  void validate() const;
};

struct RenewalSample {
  long length = 0;
  long reasoning = 0;  // T_R
  long nhe = 0;
};

std::vector<RenewalSample> renewal_simulate(const TwoStateProcess& process, long episodes, std::uint64_t seed,
                                            int threads = 1);

struct MeanEstimate {
  double mean = 0.0;
  double se = 0.0;
};
MeanEstimate estimate_mean(std::span<const double> xs);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
/// Ordinary least squares of y on x.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

// ---- entropy-dependent hazard ------------------------------------------

/// lambda(H) = lo + (hi - lo) / (1 + exp(steepness * (H - center))), which is
/// nonincreasing in H for steepness >= 0.
struct HazardModel {
  double hi = 0.5;
  double lo = 0.05;
  double center = 1.0;
  double steepness = 3.0;
  double operator()(double entropy) const;
  void validate() const;
};

/// Per-step entropies H1_t ~ U[low, high] and H2_t = H1_t + shift * U[0, 1],
/// so H1 <= H2 pointwise.
struct EntropyPathModel {
  double low = 0.0;
  double high = 2.0;
  double shift = 0.5;
};

struct HazardPathStats {
  double mean_length = 0.0;
  double mean_nhe = 0.0;
  double bound = 0.0;        // E[N_HE] / lambda(theta)
  double slack = 0.0;        // E[L] - bound
  double slack_se = 0.0;
  bool bound_ok = false;     // slack >= -3 se
  double wald_mean = 0.0;    // E[sum_{t<=tau} lambda(H_t)], equal to 1
  double wald_se = 0.0;
};

struct HazardCheck {
  long episodes = 0;
  double theta = 0.0;
  double lambda_theta = 0.0;
  double length_gap = 0.0;  // E[L2] - E[L1]
  double gap_se = 0.0;
  bool dominance_ok = false;  // gap >= -3 se
  HazardPathStats low_path;
  HazardPathStats high_path;
};

/// Simulates both paths with common random numbers (stop at t when
/// U_t < lambda(H_t)) and checks E[L1] <= E[L2] and
/// E[L] >= E[N_HE] / lambda(theta) for each path.
HazardCheck hazard_dominance_check(const HazardModel& hazard, const EntropyPathModel& paths, double theta,
                                   long episodes, std::uint64_t seed, long max_steps = 1000000);

// ---- KL budget bounds --------------------------------------------------

/// |E_pi f - E_ref f| and M sqrt(2 KL(pi || ref)).
std::pair<double, double> pinsker_sides(std::span<const double> pi, std::span<const double> ref,
                                        std::span<const double> f, double bound_m);

/// E_pi f and min over the grid of (1/eta) log E_ref[exp(eta f)] + KL/eta.
std::pair<double, double> dv_sides(std::span<const double> pi, std::span<const double> ref,
                                   std::span<const double> f, std::span<const double> eta_grid);

/// 32 log-spaced points on [1e-3, 1e3].
std::vector<double> default_eta_grid();

struct BudgetCheck {
  int pairs = 0;
  int alphabet = 0;
  int pinsker_violations = 0;
  int dv_violations = 0;
  double worst_pinsker_margin = 0.0;  // min over pairs of (rhs - lhs)
  double worst_dv_margin = 0.0;
  double slack = 1e-9;
};

/// Random (pi, ref, f) triples on a finite alphabet, f uniform in [-M, M].
BudgetCheck budget_bounds_check(int pairs, int alphabet, double bound_m, std::uint64_t seed);

}  // namespace entlab
