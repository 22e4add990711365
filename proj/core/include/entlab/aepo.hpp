#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "entlab/entropy.hpp"
#include "entlab/policy.hpp"
#include "entlab/rollout.hpp"

namespace entlab {

enum class AlgoMode { aepo, grpo, dapo };
std::string_view to_string(AlgoMode m);

enum class Aggregation { per_sequence, token_level };

/// Per-trajectory advantage pieces. shaped = group + bonus, elementwise.
struct AdvantageSet {
  std::vector<double> group;
  std::vector<double> bonus;
  std::vector<double> shaped;
};

struct KlReport {
  std::vector<double> kld;
  std::vector<double> weights;
  double control_kl = 0.0;
};

/// (r_i - mean) / (std + eps) with the population standard deviation.
std::vector<double> grpo_advantage(std::span<const double> rewards, double eps);

/// A[i][t] = (R_i - mean R) / L_i for every step t of trajectory i.
std::vector<std::vector<double>> group_centered_token_advantage(std::span<const double> rewards,
                                                                std::span<const std::size_t> lengths);

/// psi[i][t] = lambda * max(0, Hbar[i][t] - tau) * m[i][t] - b, where b is
/// the mean of the first term over every token of the group.
std::vector<std::vector<double>> token_entropy_bonus(std::span<const EntropyProfile> group, double tau,
                                                     double lambda);

double categorical_kl(std::span<const double> p, std::span<const double> q);

/// Exact KL(pi_theta || pi_ref) at every visited state of the trajectory.
std::vector<double> token_kl(const PolicyTable& policy, const Trajectory& trajectory);

/// beta_d * rho on masked tokens, beta_d elsewhere.
std::vector<double> kl_weights(const std::vector<bool>& mask, double beta, double rho);

/// (1 / L) * sum of kld over unmasked tokens of one trajectory.
double control_kl(std::span<const double> kld, const std::vector<bool>& mask);

/// clip(kappa * (1 + alpha * (kl_ctrl / delta - 1)), kappa_min, kappa_max)
double kl_controller_update(double kappa, double kl_ctrl, double delta, double alpha, double kappa_min,
                            double kappa_max);

struct SurrogateItem {
  const Trajectory* trajectory = nullptr;
  std::vector<double> advantages;  // shaped advantages, held constant
  std::vector<double> kl_weights;  // beta_{i,t}; empty disables the KL term
  double kappa = 0.0;
  double weight = 1.0;             // aggregation coefficient applied to every token
};

struct SurrogateOptions {
  double clip_low = 0.2;
  double clip_high = 0.28;
};

struct SurrogateResult {
  double loss = 0.0;
  double policy_loss = 0.0;
  double kl_loss = 0.0;
  GradientTable gradient;
  std::size_t tokens = 0;
  std::size_t clipped_tokens = 0;
};

/// Aggregation coefficients for a batch of groups. per_sequence gives
/// 1 / (groups * G_g * L_i); token_level gives 1 / (total tokens).
std::vector<std::vector<double>> aggregation_weights(std::span<const std::vector<std::size_t>> group_lengths,
                                                     Aggregation agg);

/// Clipped surrogate with the token-weighted KL loss, and its exact gradient
/// with respect to the current weights. Ratios are taken against the old
/// snapshot, KL against the reference snapshot.
SurrogateResult surrogate_loss(const PolicyTable& policy, std::span<const SurrogateItem> items,
                               const SurrogateOptions& options);

}  // namespace entlab
