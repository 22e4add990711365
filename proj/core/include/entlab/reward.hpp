#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "entlab/difficulty.hpp"

namespace entlab {

enum class RewardMode { canonical, encourage };
std::string_view to_string(RewardMode m);

struct ShapedReward {
  int accuracy_reward = 0;
  double deviation = 0.0;
  double shaping = 0.0;
  double lambda = 0.0;
  double entropy_term = 0.0;
  double total = 0.0;
  RewardMode mode = RewardMode::canonical;
};

double deviation(int n_he, double target);

/// g_d: easy -> max(0, d), medium -> |d|, hard -> max(0, -d).
double shaping_direction(double delta, Bucket d);

/// max(0, (mean - target) / (var + eps)).
double lagrange_multiplier(double batch_mean_nhe, double target, double batch_var_nhe, double eps = 1e-8);

/// canonical: R = acc - [acc == 0] * lambda * g_d(delta).
/// encourage: as canonical, except hard prompts get +lambda * max(0, delta)
/// whatever the accuracy.
ShapedReward hierarchical_reward(int accuracy, double delta, Bucket d, double lambda,
                                 RewardMode mode = RewardMode::canonical);

/// Indices of groups whose mean total reward lies in [lo, hi].
std::vector<std::size_t> online_filter(std::span<const double> group_mean_rewards, double lo = 0.01,
                                       double hi = 0.99);

}  // namespace entlab
