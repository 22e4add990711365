#pragma once
// Random small surrogate instances checked against finite differences of an
// independently computed loss. Shared by the unit suite and the acceptance run.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "entlab/aepo.hpp"
#include "entlab/rng.hpp"
#include "entlab/rollout.hpp"
#include "oracles.hpp"

namespace gradcheck {

struct Outcome {
  double max_rel_error = 0.0;
  std::size_t coords = 0;
};

/// One instance with V in [3, 8], G in [1, 4], L in [1, 6]. Tokens whose
/// ratio sits within 1e-2 of a clip edge are resampled so the loss is smooth
/// on the stencil.
inline Outcome run_instance(std::uint64_t seed) {
  using namespace entlab;
  Rng rng(seed);
  const int v = 3 + static_cast<int>(rng.below(6));
  const int g = 1 + static_cast<int>(rng.below(4));
  const PolicyShape shape{v, 1 + static_cast<int>(rng.below(2)), rng.uniform() < 0.5};
  const SurrogateOptions opt{0.2, 0.28};

  for (;;) {
    PolicyTable policy(shape);
    std::vector<double> cur(policy.weights().size()), ref(cur.size()), old(cur.size());
    for (std::size_t i = 0; i < cur.size(); ++i) {
      ref[i] = rng.normal();
      old[i] = ref[i] + 0.3 * rng.normal();
      cur[i] = old[i] + 0.2 * rng.normal();
    }
    policy.load(cur, ref, old);

    TaskInstance task;
    task.prompt = {static_cast<Token>(rng.below(static_cast<std::uint64_t>(v))), 0};
    task.gold_answer = {0};
    const TaskVocab vocab{v, 0};
    const SamplingParams params{1 + static_cast<int>(rng.below(6)), 1.0, 1.0};
    std::vector<Trajectory> trs;
    for (int i = 0; i < g; ++i) trs.push_back(sample_rollout(policy, task, params, rng.raw(), vocab));

    bool near_edge = false;
    for (const auto& tr : trs)
      for (std::size_t t = 0; t < tr.length(); ++t) {
        const double r = std::exp(policy.log_prob(tr.contexts[t], tr.tokens[t]) -
                                  policy.log_prob(tr.contexts[t], tr.tokens[t], Snapshot::old));
        if (std::abs(r - (1.0 - opt.clip_low)) < 1e-2 || std::abs(r - (1.0 + opt.clip_high)) < 1e-2) near_edge = true;
      }
    if (near_edge) continue;

    std::vector<std::vector<std::size_t>> lengths(1);
    for (const auto& tr : trs) lengths[0].push_back(tr.length());
    const auto weights = aggregation_weights(lengths, rng.uniform() < 0.5 ? Aggregation::per_sequence
                                                                          : Aggregation::token_level);
    std::vector<SurrogateItem> items;
    std::vector<oracle::SurrogateInput> ref_items;
    for (int i = 0; i < g; ++i) {
      SurrogateItem it;
      it.trajectory = &trs[static_cast<std::size_t>(i)];
      for (std::size_t t = 0; t < it.trajectory->length(); ++t) {
        it.advantages.push_back(rng.normal());
        it.kl_weights.push_back(0.01 + 0.1 * rng.uniform());
      }
      it.kappa = 0.1 + 2.0 * rng.uniform();
      it.weight = weights[0][static_cast<std::size_t>(i)];
      ref_items.push_back({it.trajectory, it.advantages, it.kl_weights, it.kappa, it.weight});
      items.push_back(std::move(it));
    }

    const auto res = surrogate_loss(policy, items, opt);
    const auto f = [&](const std::vector<double>& w) {
      return oracle::surrogate(w, old, ref, static_cast<std::size_t>(v), ref_items, opt.clip_low, opt.clip_high);
    };
    std::vector<std::size_t> coords(cur.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    const auto fd = oracle::five_point_difference(f, cur, coords, 1e-3);

    Outcome out;
    out.coords = coords.size();
    for (std::size_t i = 0; i < coords.size(); ++i) {
      const double a = res.gradient.values[i];
      const double b = fd[i];
      const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
      out.max_rel_error = std::max(out.max_rel_error, std::abs(a - b) / denom);
    }
    return out;
  }
}

}  // namespace gradcheck
