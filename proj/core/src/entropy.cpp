#include "entlab/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace entlab {

void SemanticVocab::validate(Token stop) const {
  if (allowlist.empty()) throw std::invalid_argument("semantic allowlist is empty");
  if (contains(stop)) throw std::invalid_argument("semantic allowlist must not contain STOP");
}

double token_entropy(std::span<const double> distribution) {
  if (distribution.empty()) throw std::invalid_argument("empty distribution");
  double total = 0.0;
  double h = 0.0;
  for (double p : distribution) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("distribution has a negative or non-finite entry");
    total += p;
    if (p > 0.0) h -= p * std::log(p);
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("distribution does not sum to 1");
  return std::max(h, 0.0);
}

std::vector<double> window_entropy(std::span<const double> entropies, int w) {
  if (w < 1) throw std::invalid_argument("window size must be >= 1");
  const std::size_t n = entropies.size();
  const auto ws = static_cast<std::size_t>(w);
  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t end = std::min(n, t + ws);
    double sum = 0.0;
    for (std::size_t j = t; j < end; ++j) sum += entropies[j];
    out[t] = sum / static_cast<double>(end - t);
  }
  return out;
}

double sequence_threshold(std::span<const double> entropies, double q) {
  if (entropies.empty()) throw std::invalid_argument("sequence_threshold of an empty sequence");
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("quantile must lie in (0, 1)");
  std::vector<double> sorted(entropies.begin(), entropies.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  // small guard so that e.g. 0.95 * 20 lands on rank 19
  auto rank = static_cast<std::ptrdiff_t>(std::ceil(q * n - 1e-9));
  rank = std::clamp<std::ptrdiff_t>(rank, 1, static_cast<std::ptrdiff_t>(sorted.size()));
  return sorted[static_cast<std::size_t>(rank - 1)];
}

double batch_threshold(std::span<const std::vector<double>> per_trajectory_entropies, double q) {
  if (per_trajectory_entropies.empty()) throw std::invalid_argument("batch_threshold of an empty batch");
  double sum = 0.0;
  for (const auto& h : per_trajectory_entropies) sum += sequence_threshold(h, q);
  return sum / static_cast<double>(per_trajectory_entropies.size());
}

EntropyProfile hwe_detect(std::span<const Token> tokens, std::span<const double> entropies, double tau, int w,
                          const SemanticVocab& vocab, HweMode mode) {
  if (!std::isfinite(tau)) throw std::invalid_argument("threshold must be finite");
  if (tokens.size() != entropies.size()) throw std::invalid_argument("tokens and entropies differ in length");
  EntropyProfile prof;
  prof.token_entropies.assign(entropies.begin(), entropies.end());
  prof.window_size = w;
  prof.window_means = window_entropy(entropies, w);
  const std::size_t n = tokens.size();
  prof.hwe_mask.assign(n, false);
  prof.counted_mask.assign(n, false);
  for (std::size_t t = 0; t < n; ++t) {
    const bool allowed = vocab.contains(tokens[t]);
    if (mode == HweMode::window) {
      prof.hwe_mask[t] = prof.window_means[t] >= tau;
    } else {
      prof.hwe_mask[t] = entropies[t] >= tau && allowed;
    }
    prof.counted_mask[t] = prof.hwe_mask[t] && allowed;
    if (prof.counted_mask[t]) ++prof.hwe_count;
  }
  return prof;
}

}  // namespace entlab
