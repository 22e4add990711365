#include "entlab/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace entlab {

void AdamW::step(PolicyTable& policy, const GradientTable& gradient) {
  auto w = policy.mutable_weights();
  if (gradient.values.size() != w.size() || m_.size() != w.size())
    throw std::invalid_argument("optimizer/gradient/policy size mismatch");
  ++t_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double lr = options_.learning_rate;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double g = gradient.values[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    if (m_[i] == 0.0 && options_.weight_decay == 0.0) continue;
    const double mhat = m_[i] / c1;
    const double vhat = v_[i] / c2;
    w[i] -= lr * (mhat / (std::sqrt(vhat) + options_.eps) + options_.weight_decay * w[i]);
  }
}

void AdamW::restore(std::int64_t steps, std::vector<double> m, std::vector<double> v) {
  if (m.size() != m_.size() || v.size() != v_.size()) throw std::invalid_argument("optimizer state size mismatch");
  t_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace entlab
