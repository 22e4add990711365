#include "entlab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "entlab/aepo.hpp"
#include "entlab/parallel.hpp"
#include "entlab/reward.hpp"
#include "entlab/rng.hpp"

namespace entlab {

namespace {

constexpr std::uint64_t kMixStream = 0x6d6978;
constexpr std::uint64_t kTaskStream = 0x7461736b;
constexpr std::uint64_t kRolloutStream = 0x726f6c6c;
constexpr std::uint64_t kEvalStream = 0x6576616c;

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double variance_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size());
}

double delta_for(const ExperimentConfig& c, Bucket b) {
  switch (b) {
    case Bucket::easy: return c.delta_easy;
    case Bucket::medium: return c.delta_medium;
    case Bucket::hard: return c.delta_hard;
  }
  return c.delta_medium;
}

double beta_for(const ExperimentConfig& c, Bucket b) {
  switch (b) {
    case Bucket::easy: return c.beta_easy;
    case Bucket::medium: return c.beta_medium;
    case Bucket::hard: return c.beta_hard;
  }
  return c.beta_medium;
}

int pick_knob(const std::vector<MixEntry>& mix, Rng& rng) {
  double total = 0.0;
  for (const auto& e : mix) total += e.weight;
  double u = rng.uniform() * total;
  for (const auto& e : mix) {
    if (u < e.weight) return e.knob;
    u -= e.weight;
  }
  for (auto it = mix.rbegin(); it != mix.rend(); ++it)
    if (it->weight > 0.0) return it->knob;
  return mix.back().knob;
}

}  // namespace

PolicyShape policy_shape(const ExperimentConfig& c) {
  return PolicyShape{c.vocab_size, c.context_order, c.prompt_anchor};
}

TaskVocab task_vocab(const ExperimentConfig& c) { return TaskVocab{c.vocab_size, c.connectives}; }

SemanticVocab semantic_vocab(const ExperimentConfig& c) {
  SemanticVocab sem;
  const auto ids = c.parsed_allowlist();
  if (ids.empty()) {
    for (Token t : task_vocab(c).connective_tokens()) sem.allowlist.insert(t);
  } else {
    for (int t : ids) sem.allowlist.insert(static_cast<Token>(t));
  }
  sem.validate(task_vocab(c).stop());
  return sem;
}

SamplingParams sampling_params(const ExperimentConfig& c) { return SamplingParams{c.max_len, c.temperature, c.top_p}; }

ColdStartLogits cold_start_logits(const ExperimentConfig& c) {
  ColdStartLogits l;
  l.chain = c.cold_chain;
  l.end_stop = c.cold_end_stop;
  l.end_reflect = c.cold_end_reflect;
  l.end_digit = c.cold_end_digit;
  l.reflect_continue = c.cold_reflect_continue;
  l.reflect_stop = c.cold_reflect_stop;
  l.reflect_digit = c.cold_reflect_digit;
  return l;
}

TrainState initial_state(const ExperimentConfig& c) {
  c.validate();
  TrainState s{PolicyTable(policy_shape(c)), AdamW{}, BucketState{}, 0, false, 0.0};
  apply_cold_start(s.policy, task_vocab(c), cold_start_logits(c));
  AdamWOptions opt;
  opt.learning_rate = c.learning_rate;
  opt.beta1 = c.adam_beta1;
  opt.beta2 = c.adam_beta2;
  opt.weight_decay = c.weight_decay;
  s.optimizer = AdamW(s.policy.weights().size(), opt);
  s.buckets.ema_decay = c.ema_decay;
  s.buckets.kappa_min = c.kappa_min;
  s.buckets.kappa_max = c.kappa_max;
  for (Bucket b : kBuckets) {
    auto& p = s.buckets[b];
    p.kl_base = beta_for(c, b);
    p.kl_budget = delta_for(c, b);
    p.kappa = c.kappa_init;
  }
  return s;
}

std::vector<TaskInstance> sample_batch(const ExperimentConfig& c, int iteration) {
  const auto mix = c.parsed_mix();
  const auto vocab = task_vocab(c);
  std::vector<TaskInstance> out;
  out.reserve(static_cast<std::size_t>(c.batch_size));
  const auto it = static_cast<std::uint64_t>(iteration);
  for (int b = 0; b < c.batch_size; ++b) {
    const auto bi = static_cast<std::uint64_t>(b);
    Rng rng(derive_seed(c.seed, {kMixStream, it, bi}));
    out.push_back(make_task(pick_knob(mix, rng), derive_seed(c.seed, {kTaskStream, it, bi}), vocab));
  }
  return out;
}

MetricRecord train_step(const ExperimentConfig& c, TrainState& state, std::vector<ScoredGroup>* groups_out) {
  const int G = c.group_size;
  const auto vocab = task_vocab(c);
  const auto sem = semantic_vocab(c);
  const auto params = sampling_params(c);
  const bool aepo = c.mode == AlgoMode::aepo;
  const auto it = static_cast<std::uint64_t>(state.iteration);
  PolicyTable& policy = state.policy;

  // 1. old policy <- current
  policy.refresh_old();

  // 2-3. rollouts, then branch where the window entropy crosses last
  // iteration's threshold
  const auto tasks = sample_batch(c, state.iteration);
  std::vector<ScoredGroup> groups(tasks.size());
  std::vector<int> branch_counts(tasks.size(), 0);
  const bool branch = aepo && c.branching && state.has_prev_tau && c.branches_per_trigger > 0 && c.max_triggers > 0;
  parallel_for(tasks.size(), c.threads, [&](std::size_t b) {
    auto& grp = groups[b];
    grp.task = tasks[b];
    std::vector<Trajectory> branched;
    for (int g = 0; g < G; ++g) {
      const auto seed = derive_seed(c.seed, {kRolloutStream, it, static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(g)});
      grp.trajectories.push_back(sample_rollout(policy, grp.task, params, seed, vocab));
      if (!branch) continue;
      const auto& parent = grp.trajectories.back();
      const auto means = window_entropy(parent.entropies, c.window);
      std::vector<std::size_t> triggers;
      for (std::size_t t = 0; t < means.size() && static_cast<int>(triggers.size()) < c.max_triggers; ++t)
        if (means[t] >= state.prev_tau) triggers.push_back(t);
      auto extra = branch_rollouts(policy, grp.task, parent, triggers, c.branches_per_trigger, params, vocab);
      branch_counts[b] += static_cast<int>(extra.size());
      for (auto& e : extra) branched.push_back(std::move(e));
    }
    if (c.branches_join_group)
      for (auto& e : branched) grp.trajectories.push_back(std::move(e));
  });

  // 4. batch threshold
  std::vector<std::vector<double>> all_entropies;
  for (const auto& grp : groups)
    for (const auto& tr : grp.trajectories) all_entropies.push_back(tr.entropies);
  const double tau = batch_threshold(all_entropies, c.quantile);

  // 5-6. window masks, gated counts, buckets from the primary rollouts
  BucketBatch nhe_batch;
  for (auto& grp : groups) {
    for (const auto& tr : grp.trajectories)
      grp.profiles.push_back(hwe_detect(tr.tokens, tr.entropies, tau, c.window, sem, HweMode::window));
    std::vector<int> acc;
    for (int g = 0; g < G; ++g) acc.push_back(grp.trajectories[static_cast<std::size_t>(g)].accuracy);
    grp.pass_count = pass_count(acc);
    grp.bucket = assign_bucket(grp.pass_count, G);
    for (const auto& p : grp.profiles) nhe_batch[grp.bucket].push_back(static_cast<double>(p.hwe_count));
  }

  // 7. lambda_d against the target carried in from earlier iterations
  std::array<double, 3> lambda{};
  for (Bucket b : kBuckets) {
    const auto& obs = nhe_batch[b];
    const auto& bp = state.buckets[b];
    if (!aepo || obs.empty() || !bp.has_target) continue;
    lambda[index(b)] = lagrange_multiplier(mean_of(obs), bp.hwe_target, variance_of(obs), c.lambda_eps);
  }
  for (Bucket b : kBuckets) state.buckets[b].lambda = lambda[index(b)];

  // 8. rewards, per-trajectory KL
  std::vector<double> group_means;
  for (auto& grp : groups) {
    const auto& bp = state.buckets[grp.bucket];
    for (std::size_t i = 0; i < grp.trajectories.size(); ++i) {
      const auto& tr = grp.trajectories[i];
      double r = tr.accuracy;
      if (aepo) {
        const double target = bp.has_target ? bp.hwe_target : static_cast<double>(grp.profiles[i].hwe_count);
        const double d = deviation(grp.profiles[i].hwe_count, target);
        r = hierarchical_reward(tr.accuracy, d, grp.bucket, lambda[index(grp.bucket)], c.reward_mode).total;
      }
      grp.rewards.push_back(r);
      const auto kld = token_kl(policy, tr);
      grp.kl_ctrl.push_back(control_kl(kld, grp.profiles[i].hwe_mask));
    }
    group_means.push_back(mean_of(grp.rewards));
  }

  // 9. online filter
  for (std::size_t k : online_filter(group_means, c.filter_low, c.filter_high)) groups[k].retained = true;

  // 10-11. advantages and KL weights for the retained groups
  std::vector<const ScoredGroup*> kept;
  for (const auto& grp : groups)
    if (grp.retained) kept.push_back(&grp);

  std::vector<std::vector<std::size_t>> lengths;
  for (const auto* grp : kept) {
    std::vector<std::size_t> l;
    for (const auto& tr : grp->trajectories) l.push_back(tr.length());
    lengths.push_back(std::move(l));
  }
  const auto agg = aggregation_weights(lengths, c.mode == AlgoMode::dapo ? Aggregation::token_level
                                                                         : Aggregation::per_sequence);
  std::vector<SurrogateItem> items;
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const auto& grp = *kept[k];
    const auto& bp = state.buckets[grp.bucket];
    std::vector<std::vector<double>> adv;
    if (aepo) {
      adv = group_centered_token_advantage(grp.rewards, lengths[k]);
      const auto bonus = token_entropy_bonus(grp.profiles, tau, lambda[index(grp.bucket)]);
      for (std::size_t i = 0; i < adv.size(); ++i)
        for (std::size_t t = 0; t < adv[i].size(); ++t) adv[i][t] += bonus[i][t];
    } else {
      const auto a = grpo_advantage(grp.rewards, c.adv_eps);
      for (std::size_t i = 0; i < a.size(); ++i) adv.emplace_back(lengths[k][i], a[i]);
    }
    for (std::size_t i = 0; i < grp.trajectories.size(); ++i) {
      SurrogateItem item;
      item.trajectory = &grp.trajectories[i];
      item.advantages = std::move(adv[i]);
      item.weight = agg[k][i];
      if (aepo) {
        item.kl_weights = kl_weights(grp.profiles[i].hwe_mask, bp.kl_base, c.rho);
        item.kappa = bp.kappa;
      } else if (c.mode == AlgoMode::grpo && c.grpo_kl) {
        item.kl_weights.assign(grp.trajectories[i].length(), bp.kl_base);
        item.kappa = c.kappa_init;
      }
      items.push_back(std::move(item));
    }
  }

  // 12. actor updates
  MetricRecord rec;
  rec.iteration = state.iteration;
  rec.mode = c.mode;
  rec.tau = tau;
  rec.skipped = items.empty();
  if (!items.empty()) {
    SurrogateOptions opt;
    if (c.mode == AlgoMode::grpo) {
      opt.clip_low = c.grpo_clip;
      opt.clip_high = c.grpo_clip;
    } else {
      opt.clip_low = c.clip_low;
      opt.clip_high = c.clip_high;
    }
    std::size_t tokens = 0;
    std::size_t clipped = 0;
    for (int u = 0; u < c.updates_per_iter; ++u) {
      auto res = surrogate_loss(policy, items, opt);
      if (u == 0) rec.loss = res.loss;
      tokens += res.tokens;
      clipped += res.clipped_tokens;
      state.optimizer.step(policy, res.gradient);
    }
    rec.clipped_fraction = tokens > 0 ? static_cast<double>(clipped) / static_cast<double>(tokens) : 0.0;
  }

  // 13. dual controller on the non-window KL of each bucket
  std::array<std::vector<double>, 3> kl_by_bucket;
  for (const auto& grp : groups)
    for (double k : grp.kl_ctrl) kl_by_bucket[index(grp.bucket)].push_back(k);
  if (aepo) {
    for (Bucket b : kBuckets) {
      const auto& ks = kl_by_bucket[index(b)];
      if (ks.empty()) continue;
      auto& bp = state.buckets[b];
      bp.kappa = kl_controller_update(bp.kappa, mean_of(ks), bp.kl_budget, c.alpha_kappa, state.buckets.kappa_min,
                                      state.buckets.kappa_max);
    }
  }

  // 14. EMA targets
  state.buckets = update_bucket_targets(state.buckets, nhe_batch);

  // 15. metrics
  std::vector<double> acc_all, len_all, nhe_all, kl_all;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const auto& grp = groups[k];
    auto& bm = rec.buckets[index(grp.bucket)];
    ++bm.groups;
    if (!grp.retained) bm.filtered_fraction += 1.0;
    rec.branches += branch_counts[k];
    for (std::size_t i = 0; i < grp.trajectories.size(); ++i) {
      const auto& tr = grp.trajectories[i];
      rec.sampling_warnings += tr.sampling_warnings;
      acc_all.push_back(tr.accuracy);
      len_all.push_back(static_cast<double>(tr.length()));
      nhe_all.push_back(grp.profiles[i].hwe_count);
      kl_all.push_back(grp.kl_ctrl[i]);
      bm.trajectories += 1;
      bm.accuracy_mean += tr.accuracy;
      bm.length_mean += static_cast<double>(tr.length());
      bm.nhe_mean += grp.profiles[i].hwe_count;
      bm.kl_ctrl += grp.kl_ctrl[i];
    }
  }
  for (Bucket b : kBuckets) {
    auto& bm = rec.buckets[index(b)];
    const auto& bp = state.buckets[b];
    bm.kappa = bp.kappa;
    bm.lambda = bp.lambda;
    bm.hwe_target = bp.hwe_target;
    if (bm.trajectories > 0) {
      const double n = bm.trajectories;
      bm.accuracy_mean /= n;
      bm.length_mean /= n;
      bm.nhe_mean /= n;
      bm.kl_ctrl /= n;
    }
    if (bm.groups > 0) bm.filtered_fraction /= bm.groups;
  }
  rec.groups = static_cast<int>(groups.size());
  rec.trajectories = static_cast<int>(acc_all.size());
  rec.accuracy_mean = mean_of(acc_all);
  rec.length_mean = mean_of(len_all);
  rec.nhe_mean = mean_of(nhe_all);
  rec.kl_ctrl = mean_of(kl_all);
  rec.filtered_fraction = 1.0 - static_cast<double>(kept.size()) / static_cast<double>(groups.size());

  state.prev_tau = tau;
  state.has_prev_tau = true;
  ++state.iteration;
  if (groups_out) *groups_out = std::move(groups);
  return rec;
}

EvalSet make_eval_set(const ExperimentConfig& c, int per_knob, std::uint64_t seed) {
  const auto vocab = task_vocab(c);
  const auto params = sampling_params(c);
  PolicyTable ref(policy_shape(c));
  apply_cold_start(ref, vocab, cold_start_logits(c));
  EvalSet set;
  std::uint64_t n = 0;
  for (const auto& e : c.parsed_mix()) {
    for (int j = 0; j < per_knob; ++j) {
      auto task = make_task(e.knob, derive_seed(seed, {kEvalStream, n++}), vocab);
      std::vector<int> acc;
      for (int g = 0; g < c.group_size; ++g)
        acc.push_back(sample_rollout(ref, task, params, derive_seed(seed, {kEvalStream, n, 0x7265, static_cast<std::uint64_t>(g)}), vocab).accuracy);
      set.buckets.push_back(assign_bucket(pass_count(acc), c.group_size));
      set.tasks.push_back(std::move(task));
    }
  }
  return set;
}

std::array<EvalBucket, 3> evaluate(const ExperimentConfig& c, const PolicyTable& policy, const EvalSet& set,
                                   int samples, std::uint64_t seed) {
  const auto vocab = task_vocab(c);
  const auto params = sampling_params(c);
  std::vector<std::array<double, 2>> per_task(set.tasks.size());
  parallel_for(set.tasks.size(), c.threads, [&](std::size_t k) {
    double acc = 0.0;
    double len = 0.0;
    for (int s = 0; s < samples; ++s) {
      const auto tr = sample_rollout(policy, set.tasks[k], params,
                                     derive_seed(seed, {kEvalStream, k, static_cast<std::uint64_t>(s)}), vocab);
      acc += tr.accuracy;
      len += static_cast<double>(tr.length());
    }
    per_task[k] = {acc / samples, len / samples};
  });
  std::array<EvalBucket, 3> out{};
  for (std::size_t k = 0; k < set.tasks.size(); ++k) {
    auto& eb = out[index(set.buckets[k])];
    ++eb.prompts;
    eb.accuracy += per_task[k][0];
    eb.length += per_task[k][1];
  }
  for (auto& eb : out) {
    if (eb.prompts == 0) continue;
    eb.accuracy /= eb.prompts;
    eb.length /= eb.prompts;
  }
  return out;
}

}  // namespace entlab
