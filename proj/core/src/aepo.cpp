#include "entlab/aepo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace entlab {

std::string_view to_string(AlgoMode m) {
  switch (m) {
    case AlgoMode::aepo: return "aepo";
    case AlgoMode::grpo: return "grpo";
    case AlgoMode::dapo: return "dapo";
  }
  return "?";
}

std::vector<double> grpo_advantage(std::span<const double> rewards, double eps) {
  if (rewards.size() < 2) throw std::invalid_argument("grpo_advantage needs at least two rewards");
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  const auto [lo, hi] = std::minmax_element(rewards.begin(), rewards.end());
  std::vector<double> out;
  out.reserve(rewards.size());
  for (double r : rewards) {
    const double num = *lo == *hi ? 0.0 : r - mean;
    out.push_back(num == 0.0 ? 0.0 : num / (sd + eps));
  }
  return out;
}

std::vector<std::vector<double>> group_centered_token_advantage(std::span<const double> rewards,
                                                                std::span<const std::size_t> lengths) {
  if (rewards.size() != lengths.size()) throw std::invalid_argument("rewards and lengths differ in size");
  if (rewards.empty()) return {};
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(rewards.size());
  const auto [lo, hi] = std::minmax_element(rewards.begin(), rewards.end());
  const bool constant = *lo == *hi;
  std::vector<std::vector<double>> out(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    if (lengths[i] == 0) throw std::invalid_argument("trajectory length must be positive");
    const double centred = constant ? 0.0 : rewards[i] - mean;
    out[i].assign(lengths[i], centred / static_cast<double>(lengths[i]));
  }
  return out;
}

std::vector<std::vector<double>> token_entropy_bonus(std::span<const EntropyProfile> group, double tau,
                                                     double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
  std::vector<std::vector<double>> out(group.size());
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < group.size(); ++i) {
    const auto& p = group[i];
    out[i].resize(p.window_means.size());
    for (std::size_t t = 0; t < p.window_means.size(); ++t) {
      const double excess = std::max(0.0, p.window_means[t] - tau);
      out[i][t] = p.hwe_mask[t] ? lambda * excess : 0.0;
      sum += out[i][t];
    }
    count += p.window_means.size();
  }
  const double b = count > 0 ? sum / static_cast<double>(count) : 0.0;
  for (auto& row : out)
    for (double& x : row) x -= b;
  return out;
}

double categorical_kl(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("distributions differ in size");
  double kl = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] <= 0.0) continue;
    if (q[j] <= 0.0) return INFINITY;
    kl += p[j] * (std::log(p[j]) - std::log(q[j]));
  }
  return std::max(kl, 0.0);
}

namespace {

std::vector<double> log_softmax(std::span<const double> z) {
  double hi = -INFINITY;
  for (double x : z) hi = std::max(hi, x);
  double total = 0.0;
  for (double x : z) total += std::exp(x - hi);
  const double lse = hi + std::log(total);
  std::vector<double> out(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) out[j] = z[j] - lse;
  return out;
}

// KL(softmax(z) || softmax(zr)) from log-probabilities; stable for peaked rows.
double kl_from_logits(std::span<const double> z, std::span<const double> zr, std::vector<double>* logp_out = nullptr,
                      std::vector<double>* logr_out = nullptr) {
  auto lp = log_softmax(z);
  auto lr = log_softmax(zr);
  double kl = 0.0;
  for (std::size_t j = 0; j < lp.size(); ++j) kl += std::exp(lp[j]) * (lp[j] - lr[j]);
  kl = std::max(kl, 0.0);
  if (logp_out) *logp_out = std::move(lp);
  if (logr_out) *logr_out = std::move(lr);
  return kl;
}

}  // namespace

std::vector<double> token_kl(const PolicyTable& policy, const Trajectory& trajectory) {
  std::vector<double> out(trajectory.length());
  for (std::size_t t = 0; t < trajectory.length(); ++t) {
    const std::size_t ctx = trajectory.contexts[t];
    out[t] = kl_from_logits(policy.logits(ctx, Snapshot::current), policy.logits(ctx, Snapshot::reference));
  }
  return out;
}

std::vector<double> kl_weights(const std::vector<bool>& mask, double beta, double rho) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in (0, 1]");
  std::vector<double> out(mask.size());
  for (std::size_t t = 0; t < mask.size(); ++t) out[t] = mask[t] ? beta * rho : beta;
  return out;
}

double control_kl(std::span<const double> kld, const std::vector<bool>& mask) {
  if (kld.size() != mask.size()) throw std::invalid_argument("kld and mask differ in length");
  if (kld.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t t = 0; t < kld.size(); ++t)
    if (!mask[t]) sum += kld[t];
  return sum / static_cast<double>(kld.size());
}

double kl_controller_update(double kappa, double kl_ctrl, double delta, double alpha, double kappa_min,
                            double kappa_max) {
  if (!(delta > 0.0)) throw std::invalid_argument("KL budget must be positive");
  if (!(kappa_min > 0.0) || !(kappa_max >= kappa_min)) throw std::invalid_argument("invalid kappa bounds");
  return std::clamp(kappa * (1.0 + alpha * (kl_ctrl / delta - 1.0)), kappa_min, kappa_max);
}

std::vector<std::vector<double>> aggregation_weights(std::span<const std::vector<std::size_t>> group_lengths,
                                                     Aggregation agg) {
  std::vector<std::vector<double>> out(group_lengths.size());
  std::size_t total_tokens = 0;
  for (const auto& g : group_lengths) total_tokens = std::accumulate(g.begin(), g.end(), total_tokens);
  const double groups = static_cast<double>(group_lengths.size());
  for (std::size_t k = 0; k < group_lengths.size(); ++k) {
    const auto& g = group_lengths[k];
    out[k].resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g[i] == 0) throw std::invalid_argument("trajectory length must be positive");
      out[k][i] = agg == Aggregation::per_sequence
                      ? 1.0 / (groups * static_cast<double>(g.size()) * static_cast<double>(g[i]))
                      : 1.0 / static_cast<double>(total_tokens);
    }
  }
  return out;
}

SurrogateResult surrogate_loss(const PolicyTable& policy, std::span<const SurrogateItem> items,
                               const SurrogateOptions& options) {
  if (!(options.clip_low > 0.0 && options.clip_low < 1.0) || !(options.clip_high > 0.0 && options.clip_high < 1.0))
    throw std::invalid_argument("clip parameters must lie in (0, 1)");
  SurrogateResult res;
  res.gradient = policy.make_gradient();
  const double lo = 1.0 - options.clip_low;
  const double hi = 1.0 + options.clip_high;
  const auto v = static_cast<std::size_t>(policy.vocab_size());
  std::vector<double> logp;
  std::vector<double> logr;

  for (const auto& item : items) {
    if (item.trajectory == nullptr) throw std::invalid_argument("surrogate item without trajectory");
    const Trajectory& tr = *item.trajectory;
    const std::size_t n = tr.length();
    if (item.advantages.size() != n) throw std::invalid_argument("advantage length does not match trajectory");
    const bool with_kl = !item.kl_weights.empty();
    if (with_kl && item.kl_weights.size() != n) throw std::invalid_argument("KL weight length does not match trajectory");
    if (tr.contexts.size() != n) throw std::invalid_argument("trajectory is missing context ids");

    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t ctx = tr.contexts[t];
      const auto tok = static_cast<std::size_t>(tr.tokens[t]);
      const auto z = policy.logits(ctx, Snapshot::current);
      const double kl = kl_from_logits(z, policy.logits(ctx, Snapshot::reference), &logp, &logr);
      const double lp_old = policy.log_prob(ctx, tr.tokens[t], Snapshot::old);
      const double ratio = std::exp(logp[tok] - lp_old);
      const double a = item.advantages[t];
      const double clipped_ratio = std::clamp(ratio, lo, hi);
      const double surr = std::min(ratio * a, clipped_ratio * a);
      const bool clipped = (a > 0.0 && ratio > hi) || (a < 0.0 && ratio < lo);
      ++res.tokens;
      if (clipped) ++res.clipped_tokens;

      res.policy_loss -= item.weight * surr;
      auto g = res.gradient.row(ctx);
      if (!clipped && a != 0.0) {
        // d(-w r a)/dz = -w a r (onehot - p)
        const double s = -item.weight * a * ratio;
        for (std::size_t j = 0; j < v; ++j) g[j] -= s * std::exp(logp[j]);
        g[tok] += s;
      }
      if (with_kl) {
        const double c = item.weight * item.kappa * item.kl_weights[t];
        res.kl_loss += c * kl;
        if (c != 0.0) {
          for (std::size_t j = 0; j < v; ++j) {
            const double pj = std::exp(logp[j]);
            g[j] += c * pj * (logp[j] - logr[j] - kl);
          }
        }
      }
    }
  }
  res.loss = res.policy_loss + res.kl_loss;
  return res;
}

}  // namespace entlab
