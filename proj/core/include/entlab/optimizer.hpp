#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "entlab/policy.hpp"

namespace entlab {

struct AdamWOptions {
  double learning_rate = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// Decoupled-weight-decay Adam over the policy's current weights only; the
/// reference and old snapshots are never touched.
class AdamW {
 public:
  AdamW() = default;
  AdamW(std::size_t size, AdamWOptions options) : options_(options), m_(size, 0.0), v_(size, 0.0) {}

  void step(PolicyTable& policy, const GradientTable& gradient);

  const AdamWOptions& options() const { return options_; }
  std::int64_t steps() const { return t_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }
  void restore(std::int64_t steps, std::vector<double> m, std::vector<double> v);

 private:
  AdamWOptions options_{};
  std::int64_t t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

}  // namespace entlab
