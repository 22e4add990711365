#include <cmath>
#include <numeric>
#include <stdexcept>

#include "doctest.h"
#include "entlab/aepo.hpp"
#include "entlab/optimizer.hpp"
#include "entlab/rng.hpp"
#include "gradient_check.hpp"
#include "oracles.hpp"

using namespace entlab;

namespace {

EntropyProfile profile(std::vector<double> means, std::vector<bool> mask) {
  EntropyProfile p;
  p.window_means = std::move(means);
  p.hwe_mask = std::move(mask);
  return p;
}

}  // namespace

TEST_SUITE("aepo") {

TEST_CASE("group-normalised advantage") {
  auto a = grpo_advantage(std::vector<double>{1, 0, 0, 1}, 1e-12);
  for (std::size_t i = 0; i < 4; ++i) CHECK(a[i] == doctest::Approx(i == 0 || i == 3 ? 1.0 : -1.0).epsilon(1e-9));
  for (double x : grpo_advantage(std::vector<double>(5, 0.3), 1e-6)) CHECK(x == 0.0);
  a = grpo_advantage(std::vector<double>{2, 4, 6}, 0.0);
  CHECK(a[0] == doctest::Approx(-1.2247).epsilon(1e-4));
  CHECK(a[1] == 0.0);
  CHECK(a[2] == doctest::Approx(1.2247).epsilon(1e-4));
  CHECK_THROWS_AS(grpo_advantage(std::vector<double>{1.0}, 1e-6), std::invalid_argument);
}

TEST_CASE("group-normalised advantages have zero mean and unit variance") {
  Rng rng(8);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> r(2 + rng.below(14));
    for (double& x : r) x = rng.normal();
    const auto a = grpo_advantage(r, 0.0);
    CHECK(oracle::mean(a) == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
    CHECK(oracle::population_variance(a) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("length-normalised centred advantage") {
  const std::vector<double> same(3, 0.7);
  const std::vector<std::size_t> lens{2, 5, 1};
  for (const auto& row : group_centered_token_advantage(same, lens))
    for (double x : row) CHECK(x == 0.0);

  const auto a = group_centered_token_advantage(std::vector<double>{1, 0}, std::vector<std::size_t>{2, 4});
  CHECK(a[0] == std::vector<double>{0.25, 0.25});
  CHECK(a[1] == std::vector<double>{-0.125, -0.125, -0.125, -0.125});

  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> r(3);
    std::vector<std::size_t> l(3);
    for (int i = 0; i < 3; ++i) {
      r[static_cast<std::size_t>(i)] = rng.uniform();
      l[static_cast<std::size_t>(i)] = 1 + rng.below(20);
    }
    const auto b = group_centered_token_advantage(r, l);
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += static_cast<double>(l[static_cast<std::size_t>(i)]) * b[static_cast<std::size_t>(i)][0];
    CHECK(s == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(group_centered_token_advantage(std::vector<double>{1}, std::vector<std::size_t>{0}),
                  std::invalid_argument);
}

TEST_CASE("token entropy bonus") {
  const std::vector<EntropyProfile> one{profile({3.0, 2.0}, {true, false})};
  const auto off = token_entropy_bonus(one, 2.0, 0.0);
  for (double x : off[0]) CHECK(x == 0.0);
  const auto below = token_entropy_bonus(one, 5.0, 1.0);
  for (double x : below[0]) CHECK(x == 0.0);
  const auto psi = token_entropy_bonus(one, 2.0, 1.0);
  CHECK(psi[0][0] == doctest::Approx(0.5));
  CHECK(psi[0][1] == doctest::Approx(-0.5));

  // baseline is shared over every token of the group
  const std::vector<EntropyProfile> two{profile({4.0}, {true}), profile({0.0, 0.0, 0.0}, {false, false, false})};
  const auto g = token_entropy_bonus(two, 1.0, 2.0);
  CHECK(g[0][0] == doctest::Approx(6.0 - 1.5));
  CHECK(g[1][2] == doctest::Approx(-1.5));
  CHECK_THROWS_AS(token_entropy_bonus(one, 1.0, -1.0), std::invalid_argument);
}

TEST_CASE("categorical KL") {
  CHECK(categorical_kl(std::vector<double>{0.5, 0.5}, std::vector<double>{0.25, 0.75}) ==
        doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0)).epsilon(1e-12));
  CHECK(categorical_kl(std::vector<double>{0.5, 0.5}, std::vector<double>{0.25, 0.75}) ==
        doctest::Approx(0.14384).epsilon(1e-4));
  Rng rng(1);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> z(8), y(8);
    for (std::size_t i = 0; i < 8; ++i) {
      z[i] = rng.normal();
      y[i] = rng.normal();
    }
    const auto p = softmax(z), q = softmax(y);
    CHECK(categorical_kl(p, q) > 0.0);
    CHECK(categorical_kl(p, p) == 0.0);
  }
  CHECK_THROWS_AS(categorical_kl(std::vector<double>{1.0}, std::vector<double>{0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("token KL is zero at the reference and matches the categorical KL elsewhere") {
  PolicyTable policy(PolicyShape{5, 1, false});
  TaskInstance task;
  task.prompt = {0, 1};
  task.gold_answer = {2};
  const auto tr = sample_rollout(policy, task, SamplingParams{6, 1.0, 1.0}, 3, TaskVocab{5, 1});
  for (double k : token_kl(policy, tr)) CHECK(k == 0.0);
  Rng rng(2);
  for (double& w : policy.mutable_weights()) w = rng.normal();
  const auto kl = token_kl(policy, tr);
  for (std::size_t t = 0; t < tr.length(); ++t) {
    const auto p = policy.probs(tr.contexts[t]);
    const auto q = policy.probs(tr.contexts[t], Snapshot::reference);
    CHECK(kl[t] == doctest::Approx(categorical_kl(p, q)).epsilon(1e-10));
  }
}

TEST_CASE("KL weights and control KL") {
  const std::vector<bool> m{false, true, false};
  CHECK(kl_weights(m, 0.01, 0.5)[1] == doctest::Approx(0.005));
  CHECK(kl_weights(std::vector<bool>(4, false), 0.01, 0.5) == std::vector<double>(4, 0.01));
  CHECK(kl_weights(m, 0.02, 1.0) == std::vector<double>(3, 0.02));
  CHECK_THROWS_AS(kl_weights(m, 0.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(kl_weights(m, 0.01, 1.5), std::invalid_argument);

  CHECK(control_kl(std::vector<double>{0.3, 9.0, 0.6}, m) == doctest::Approx(0.3));
  CHECK(control_kl(std::vector<double>{}, std::vector<bool>{}) == 0.0);
  CHECK_THROWS_AS(control_kl(std::vector<double>{1.0}, m), std::invalid_argument);
}

TEST_CASE("multiplicative KL controller") {
  CHECK(kl_controller_update(1.3, 0.02, 0.02, 0.05, 0.1, 10.0) == doctest::Approx(1.3));
  CHECK(kl_controller_update(1.0, 0.04, 0.02, 0.1, 0.1, 10.0) == doctest::Approx(1.1));
  CHECK(kl_controller_update(10.0, 0.5, 0.02, 0.1, 0.1, 10.0) == 10.0);
  CHECK(kl_controller_update(0.1, 0.0, 0.02, 0.1, 0.1, 10.0) == 0.1);
  CHECK_THROWS_AS(kl_controller_update(1.0, 0.1, 0.0, 0.1, 0.1, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(kl_controller_update(1.0, 0.1, 0.1, 0.1, 2.0, 1.0), std::invalid_argument);
}

TEST_CASE("controller converges to the budget on a monotone response") {
  // kl = 0.05 / kappa: the fixed point is kappa = 2.5
  double kappa = 1.0;
  for (int i = 0; i < 2000; ++i) kappa = kl_controller_update(kappa, 0.05 / kappa, 0.02, 0.05, 0.1, 10.0);
  CHECK(kappa == doctest::Approx(2.5).epsilon(1e-6));
}

TEST_CASE("aggregation weights") {
  const std::vector<std::vector<std::size_t>> lens{{2, 4}, {1, 1, 2}};
  const auto seq = aggregation_weights(lens, Aggregation::per_sequence);
  CHECK(seq[0][0] == doctest::Approx(1.0 / (2 * 2 * 2)));
  CHECK(seq[1][2] == doctest::Approx(1.0 / (2 * 3 * 2)));
  const auto tok = aggregation_weights(lens, Aggregation::token_level);
  for (const auto& g : tok)
    for (double w : g) CHECK(w == doctest::Approx(0.1));
  CHECK_THROWS_AS(aggregation_weights(std::vector<std::vector<std::size_t>>{{0}}, Aggregation::token_level),
                  std::invalid_argument);
}

TEST_CASE("surrogate reduces to the mean advantage when ratios are one") {
  PolicyTable policy(PolicyShape{5, 1, false});
  Rng rng(4);
  for (double& w : policy.mutable_weights()) w = rng.normal();
  policy.refresh_old();
  TaskInstance task;
  task.prompt = {1, 2};
  task.gold_answer = {0};
  std::vector<Trajectory> trs;
  for (std::uint64_t i = 0; i < 3; ++i) trs.push_back(sample_rollout(policy, task, SamplingParams{4, 1.0, 1.0}, i, TaskVocab{5, 1}));
  std::vector<std::vector<std::size_t>> lens(1);
  for (const auto& tr : trs) lens[0].push_back(tr.length());
  const auto w = aggregation_weights(lens, Aggregation::per_sequence);

  std::vector<SurrogateItem> items;
  double expected = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    SurrogateItem it;
    it.trajectory = &trs[i];
    for (std::size_t t = 0; t < trs[i].length(); ++t) it.advantages.push_back(rng.normal());
    it.weight = w[0][i];
    expected -= oracle::mean(it.advantages) / 3.0;
    items.push_back(std::move(it));
  }
  const auto res = surrogate_loss(policy, items, SurrogateOptions{});
  CHECK(res.loss == doctest::Approx(expected).epsilon(1e-12));
  CHECK(res.kl_loss == 0.0);
  CHECK(res.clipped_tokens == 0u);

  for (auto& it : items) std::fill(it.advantages.begin(), it.advantages.end(), 0.0);
  const auto zero = surrogate_loss(policy, items, SurrogateOptions{});
  CHECK(zero.loss == 0.0);
  CHECK(zero.gradient.max_abs() == 0.0);
}

TEST_CASE("surrogate gradient matches finite differences on random small instances") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto out = gradcheck::run_instance(derive_seed(2718, s));
    CHECK(out.max_rel_error <= 1e-5);
  }
}

TEST_CASE("clipped tokens carry no policy gradient") {
  PolicyTable policy(PolicyShape{4, 1, false});
  TaskInstance task;
  task.prompt = {0, 1};
  task.gold_answer = {2};
  const auto tr = sample_rollout(policy, task, SamplingParams{1, 1.0, 1.0}, 9, TaskVocab{4, 0});
  // push the sampled token's probability far above the old policy
  policy.mutable_logits(tr.contexts[0])[static_cast<std::size_t>(tr.tokens[0])] = 3.0;
  SurrogateItem it;
  it.trajectory = &tr;
  it.advantages = {1.0};
  const std::vector<SurrogateItem> items{it};
  const auto res = surrogate_loss(policy, items, SurrogateOptions{0.2, 0.28});
  CHECK(res.clipped_tokens == 1u);
  CHECK(res.gradient.max_abs() == 0.0);
  CHECK(res.loss == doctest::Approx(-1.28));
}

TEST_CASE("KL loss is nonnegative and relaxing masked weights lowers it") {
  PolicyTable policy(PolicyShape{5, 1, false});
  Rng rng(10);
  for (double& w : policy.mutable_weights()) w = rng.normal();
  TaskInstance task;
  task.prompt = {1, 2};
  task.gold_answer = {0};
  const auto tr = sample_rollout(policy, task, SamplingParams{6, 1.0, 1.0}, 4, TaskVocab{5, 1});
  std::vector<bool> mask(tr.length(), false);
  mask[0] = true;
  SurrogateItem it;
  it.trajectory = &tr;
  it.advantages.assign(tr.length(), 0.0);
  it.kappa = 1.0;
  double prev = INFINITY;
  for (double rho : {1.0, 0.5, 0.1}) {
    it.kl_weights = kl_weights(mask, 0.05, rho);
    const std::vector<SurrogateItem> items{it};
    const auto res = surrogate_loss(policy, items, SurrogateOptions{});
    CHECK(res.kl_loss >= 0.0);
    CHECK(res.kl_loss < prev);
    prev = res.kl_loss;
  }
}

TEST_CASE("surrogate rejects malformed items") {
  PolicyTable policy(PolicyShape{4, 1, false});
  Trajectory tr;
  tr.prompt = {0};
  tr.tokens = {1, 3};
  tr.contexts = {policy.context_id(std::vector<Token>{0}), policy.context_id(std::vector<Token>{0, 1})};
  SurrogateItem it;
  it.trajectory = &tr;
  it.advantages = {1.0};
  std::vector<SurrogateItem> items{it};
  CHECK_THROWS_AS(surrogate_loss(policy, items, SurrogateOptions{}), std::invalid_argument);
  items[0].advantages = {1.0, 1.0};
  items[0].kl_weights = {0.1};
  CHECK_THROWS_AS(surrogate_loss(policy, items, SurrogateOptions{}), std::invalid_argument);
  items[0].kl_weights.clear();
  CHECK_THROWS_AS(surrogate_loss(policy, items, SurrogateOptions{1.2, 0.2}), std::invalid_argument);
}

TEST_CASE("AdamW state round-trips through restore") {
  PolicyTable a(PolicyShape{4, 1, false}), b(PolicyShape{4, 1, false});
  AdamW oa(a.weights().size(), AdamWOptions{0.1, 0.9, 0.999, 1e-8, 0.01});
  auto g = a.make_gradient();
  Rng rng(5);
  for (double& x : g.values) x = rng.normal();
  oa.step(a, g);
  oa.step(a, g);
  AdamW ob(b.weights().size(), oa.options());
  ob.restore(oa.steps(), oa.first_moment(), oa.second_moment());
  b.load({a.weights().begin(), a.weights().end()}, {a.reference_weights().begin(), a.reference_weights().end()},
         {a.old_weights().begin(), a.old_weights().end()});
  oa.step(a, g);
  ob.step(b, g);
  CHECK(std::equal(a.weights().begin(), a.weights().end(), b.weights().begin()));
}

}  // TEST_SUITE
