#include "entlab/reward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace entlab {

std::string_view to_string(RewardMode m) { return m == RewardMode::canonical ? "canonical" : "encourage"; }

double deviation(int n_he, double target) {
  if (n_he < 0) throw std::invalid_argument("n_he must be nonnegative");
  return static_cast<double>(n_he) - target;
}

double shaping_direction(double delta, Bucket d) {
  switch (d) {
    case Bucket::easy: return std::max(0.0, delta);
    case Bucket::medium: return std::abs(delta);
    case Bucket::hard: return std::max(0.0, -delta);
  }
  return 0.0;
}

double lagrange_multiplier(double batch_mean_nhe, double target, double batch_var_nhe, double eps) {
  if (batch_var_nhe < 0.0) throw std::invalid_argument("variance must be nonnegative");
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  return std::max(0.0, (batch_mean_nhe - target) / (batch_var_nhe + eps));
}

ShapedReward hierarchical_reward(int accuracy, double delta, Bucket d, double lambda, RewardMode mode) {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
  ShapedReward r;
  r.accuracy_reward = accuracy != 0 ? 1 : 0;
  r.deviation = delta;
  r.lambda = lambda;
  r.mode = mode;
  if (mode == RewardMode::encourage && d == Bucket::hard) {
    r.shaping = std::max(0.0, delta);
    r.entropy_term = lambda * r.shaping;
  } else {
    r.shaping = shaping_direction(delta, d);
    r.entropy_term = r.accuracy_reward == 0 ? -lambda * r.shaping : 0.0;
  }
  // avoid a signed zero leaking into logs
  if (r.entropy_term == 0.0) r.entropy_term = 0.0;
  r.total = static_cast<double>(r.accuracy_reward) + r.entropy_term;
  return r;
}

std::vector<std::size_t> online_filter(std::span<const double> group_mean_rewards, double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("filter range needs lo < hi");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < group_mean_rewards.size(); ++i) {
    const double m = group_mean_rewards[i];
    if (m >= lo && m <= hi) keep.push_back(i);
  }
  return keep;
}

}  // namespace entlab
