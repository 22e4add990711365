#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "entlab/policy.hpp"
#include "entlab/task.hpp"

namespace entlab {

struct SamplingParams {
  int max_len = 24;
  double temperature = 1.0;
  double top_p = 0.99;
};

/// One sampled response. `step_distributions` are the temperature-scaled,
/// top-p renormalised distributions the tokens were actually drawn from;
/// `logprobs` and `entropies` are taken on those same distributions.
struct Trajectory {
  std::vector<Token> prompt;
  std::vector<Token> tokens;
  std::vector<std::vector<double>> step_distributions;
  std::vector<double> logprobs;
  std::vector<double> entropies;
  std::vector<std::size_t> contexts;
  int accuracy = 0;
  std::uint64_t seed = 0;
  int branch_step = -1;  // step the trajectory was branched from, -1 for a root rollout
  int sampling_warnings = 0;

  std::size_t length() const { return tokens.size(); }
};

/// Sampling distribution for one context: softmax(logits / T) restricted to
/// the smallest descending-probability prefix whose mass reaches top_p.
/// Returns the argmax one-hot (and bumps `warnings`) if nothing survives.
std::vector<double> sampling_distribution(std::span<const double> logits, double temperature, double top_p,
                                          int* warnings = nullptr);

Trajectory sample_rollout(const PolicyTable& policy, const TaskInstance& task, const SamplingParams& params,
                          std::uint64_t seed, const TaskVocab& vocab = {});

/// Resamples `branches_per_trigger` continuations from each trigger step.
/// Every branch copies steps [0, t) of the parent verbatim.
std::vector<Trajectory> branch_rollouts(const PolicyTable& policy, const TaskInstance& task,
                                        const Trajectory& parent, std::span<const std::size_t> trigger_steps,
                                        int branches_per_trigger, const SamplingParams& params,
                                        const TaskVocab& vocab = {});

/// sum_t A_t * d/dtheta log pi_theta(o_t | s_t) for the untempered softmax.
GradientTable exact_policy_gradient(const PolicyTable& policy, const Trajectory& trajectory,
                                    std::span<const double> token_advantages);
void accumulate_policy_gradient(const PolicyTable& policy, const Trajectory& trajectory,
                                std::span<const double> token_advantages, GradientTable& out);

}  // namespace entlab
