#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace entlab {

enum class Bucket { easy = 0, medium = 1, hard = 2 };
inline constexpr std::array<Bucket, 3> kBuckets{Bucket::easy, Bucket::medium, Bucket::hard};

std::string_view to_string(Bucket b);
std::optional<Bucket> parse_bucket(std::string_view s);
inline std::size_t index(Bucket b) { return static_cast<std::size_t>(b); }

int pass_count(std::span<const int> accuracies);

/// Fraction thresholds: easy at >= 3/4, hard at <= 1/4, medium otherwise.
/// For G = 8 this is exactly >= 6 / 3..5 / <= 2.
Bucket assign_bucket(int pass_count, int group_size);

struct BucketParams {
  double hwe_target = 0.0;
  bool has_target = false;  // first observation seeds the EMA
  double lambda = 0.0;
  double kl_base = 0.01;    // beta_d
  double kappa = 1.0;       // kl dual
  double kl_budget = 0.02;  // delta_d
};

struct BucketState {
  std::array<BucketParams, 3> buckets{};
  double ema_decay = 0.9;
  double kappa_min = 0.1;
  double kappa_max = 10.0;

  BucketParams& operator[](Bucket b) { return buckets[index(b)]; }
  const BucketParams& operator[](Bucket b) const { return buckets[index(b)]; }
};

/// Per-bucket N_HE observations of one batch.
struct BucketBatch {
  std::array<std::vector<double>, 3> nhe;
  std::vector<double>& operator[](Bucket b) { return nhe[index(b)]; }
  const std::vector<double>& operator[](Bucket b) const { return nhe[index(b)]; }
};

/// target <- decay * target + (1 - decay) * batch mean for every bucket that
/// has data; absent buckets keep their target. An unseeded target takes the
/// batch mean directly.
BucketState update_bucket_targets(BucketState state, const BucketBatch& batch);

}  // namespace entlab
