#include "entlab/difficulty.hpp"

#include <numeric>
#include <stdexcept>

namespace entlab {

std::string_view to_string(Bucket b) {
  switch (b) {
    case Bucket::easy: return "easy";
    case Bucket::medium: return "medium";
    case Bucket::hard: return "hard";
  }
  return "?";
}

std::optional<Bucket> parse_bucket(std::string_view s) {
  if (s == "easy") return Bucket::easy;
  if (s == "medium") return Bucket::medium;
  if (s == "hard") return Bucket::hard;
  return std::nullopt;
}

int pass_count(std::span<const int> accuracies) {
  int n = 0;
  for (int a : accuracies) n += a != 0 ? 1 : 0;
  return n;
}

Bucket assign_bucket(int pass_count, int group_size) {
  if (group_size < 1) throw std::invalid_argument("group size must be >= 1");
  if (pass_count < 0 || pass_count > group_size) throw std::invalid_argument("pass count outside [0, G]");
  if (4 * pass_count >= 3 * group_size) return Bucket::easy;
  if (4 * pass_count <= group_size) return Bucket::hard;
  return Bucket::medium;
}

BucketState update_bucket_targets(BucketState state, const BucketBatch& batch) {
  for (Bucket b : kBuckets) {
    const auto& obs = batch[b];
    if (obs.empty()) continue;
    const double mean = std::accumulate(obs.begin(), obs.end(), 0.0) / static_cast<double>(obs.size());
    auto& p = state[b];
    if (!p.has_target) {
      p.hwe_target = mean;
      p.has_target = true;
    } else {
      p.hwe_target = state.ema_decay * p.hwe_target + (1.0 - state.ema_decay) * mean;
    }
  }
  return state;
}

}  // namespace entlab
