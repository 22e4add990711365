#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <vector>

#include "entlab/policy.hpp"

namespace entlab {

/// Reasoning-trigger tokens that may be counted as high-entropy tokens.
struct SemanticVocab {
  std::set<Token> allowlist;

  bool contains(Token t) const { return allowlist.count(t) != 0; }
  /// Throws if the allowlist is empty or contains `stop`.
  void validate(Token stop) const;
};

enum class HweMode { window, single_token };

struct EntropyProfile {
  std::vector<double> token_entropies;
  std::vector<double> window_means;
  int window_size = 1;
  /// Trigger mask. In window mode this is [mean >= tau] without the semantic
  /// filter; it drives branching, KL relaxation and the entropy bonus.
  std::vector<bool> hwe_mask;
  /// hwe_mask gated by the allowlist; its popcount is hwe_count.
  std::vector<bool> counted_mask;
  int hwe_count = 0;
};

/// Shannon entropy in nats, 0 log 0 := 0. Rejects negative entries or mass
/// that differs from 1 by more than 1e-9.
double token_entropy(std::span<const double> distribution);

/// Mean of entropies[t .. t+w-1], truncated at the end of the sequence.
std::vector<double> window_entropy(std::span<const double> entropies, int w);

/// Nearest-rank quantile: sorted[ceil(q * L) - 1].
double sequence_threshold(std::span<const double> entropies, double q);

/// Mean of per-trajectory nearest-rank quantiles.
double batch_threshold(std::span<const std::vector<double>> per_trajectory_entropies, double q);

EntropyProfile hwe_detect(std::span<const Token> tokens, std::span<const double> entropies, double tau, int w,
                          const SemanticVocab& vocab, HweMode mode);

}  // namespace entlab
