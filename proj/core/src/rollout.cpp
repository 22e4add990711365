#include "entlab/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "entlab/entropy.hpp"
#include "entlab/rng.hpp"

namespace entlab {

std::vector<double> sampling_distribution(std::span<const double> logits, double temperature, double top_p,
                                          int* warnings) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  std::vector<double> p = softmax(logits, temperature);
  const std::size_t v = p.size();

  std::vector<std::size_t> order(v);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });

  std::vector<double> q(v, 0.0);
  double kept = 0.0;
  if (top_p > 0.0) {
    for (std::size_t idx : order) {
      if (!(p[idx] > 0.0)) break;
      q[idx] = p[idx];
      kept += p[idx];
      if (kept >= top_p - 1e-12) break;
    }
  }
  if (!(kept > 0.0) || !std::isfinite(kept)) {
    if (warnings) ++*warnings;
    std::fill(q.begin(), q.end(), 0.0);
    q[order.front()] = 1.0;
    return q;
  }
  for (double& x : q) x /= kept;
  return q;
}

namespace {

Token draw(std::span<const double> dist, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  std::size_t last_nonzero = 0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] <= 0.0) continue;
    last_nonzero = i;
    cum += dist[i];
    if (u < cum) return static_cast<Token>(i);
  }
  return static_cast<Token>(last_nonzero);
}

// Extends `traj` (whose prompt and any prefix are already filled in) until
// STOP or max_len.
void extend(const PolicyTable& policy, const TaskInstance& task, const SamplingParams& params, Rng& rng,
            const TaskVocab& vocab, Trajectory& traj) {
  if (params.max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  std::vector<Token> seq = traj.prompt;
  seq.insert(seq.end(), traj.tokens.begin(), traj.tokens.end());
  const Token stop = policy.stop_token();
  bool stopped = !traj.tokens.empty() && traj.tokens.back() == stop;
  while (!stopped && static_cast<int>(traj.tokens.size()) < params.max_len) {
    const std::size_t ctx = policy.context_id(seq);
    auto dist = sampling_distribution(policy.logits(ctx), params.temperature, params.top_p, &traj.sampling_warnings);
    const Token tok = draw(dist, rng);
    traj.contexts.push_back(ctx);
    traj.tokens.push_back(tok);
    traj.logprobs.push_back(std::log(dist[static_cast<std::size_t>(tok)]));
    traj.entropies.push_back(token_entropy(dist));
    traj.step_distributions.push_back(std::move(dist));
    seq.push_back(tok);
    stopped = tok == stop;
  }
  traj.accuracy = verify_response(task, traj.tokens, vocab) ? 1 : 0;
}

}  // namespace

Trajectory sample_rollout(const PolicyTable& policy, const TaskInstance& task, const SamplingParams& params,
                          std::uint64_t seed, const TaskVocab& vocab) {
  Trajectory traj;
  traj.prompt = task.prompt;
  traj.seed = seed;
  Rng rng(seed);
  extend(policy, task, params, rng, vocab, traj);
  return traj;
}

std::vector<Trajectory> branch_rollouts(const PolicyTable& policy, const TaskInstance& task,
                                        const Trajectory& parent, std::span<const std::size_t> trigger_steps,
                                        int branches_per_trigger, const SamplingParams& params,
                                        const TaskVocab& vocab) {
  std::vector<Trajectory> out;
  for (std::size_t t : trigger_steps) {
    if (t >= parent.length()) throw std::invalid_argument("trigger step beyond trajectory length");
    for (int b = 0; b < branches_per_trigger; ++b) {
      Trajectory br;
      br.prompt = parent.prompt;
      br.seed = derive_seed(parent.seed, {0xb4a9c4, t, static_cast<std::uint64_t>(b)});
      br.branch_step = static_cast<int>(t);
      br.tokens.assign(parent.tokens.begin(), parent.tokens.begin() + static_cast<std::ptrdiff_t>(t));
      br.contexts.assign(parent.contexts.begin(), parent.contexts.begin() + static_cast<std::ptrdiff_t>(t));
      br.logprobs.assign(parent.logprobs.begin(), parent.logprobs.begin() + static_cast<std::ptrdiff_t>(t));
      br.entropies.assign(parent.entropies.begin(), parent.entropies.begin() + static_cast<std::ptrdiff_t>(t));
      br.step_distributions.assign(parent.step_distributions.begin(),
                                   parent.step_distributions.begin() + static_cast<std::ptrdiff_t>(t));
      Rng rng(br.seed);
      extend(policy, task, params, rng, vocab, br);
      out.push_back(std::move(br));
    }
  }
  return out;
}

void accumulate_policy_gradient(const PolicyTable& policy, const Trajectory& trajectory,
                                std::span<const double> token_advantages, GradientTable& out) {
  if (token_advantages.size() != trajectory.length())
    throw std::invalid_argument("advantage length does not match trajectory length");
  if (trajectory.contexts.size() != trajectory.length())
    throw std::invalid_argument("trajectory is missing context ids");
  for (std::size_t t = 0; t < trajectory.length(); ++t) {
    const double a = token_advantages[t];
    if (a == 0.0) continue;
    const std::size_t ctx = trajectory.contexts[t];
    const auto p = policy.probs(ctx);
    auto row = out.row(ctx);
    for (std::size_t j = 0; j < p.size(); ++j) row[j] -= a * p[j];
    row[static_cast<std::size_t>(trajectory.tokens[t])] += a;
  }
}

GradientTable exact_policy_gradient(const PolicyTable& policy, const Trajectory& trajectory,
                                    std::span<const double> token_advantages) {
  GradientTable g = policy.make_gradient();
  accumulate_policy_gradient(policy, trajectory, token_advantages, g);
  return g;
}

}  // namespace entlab
