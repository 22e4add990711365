#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "entlab/config.hpp"
#include "entlab/difficulty.hpp"
#include "entlab/entropy.hpp"
#include "entlab/optimizer.hpp"
#include "entlab/policy.hpp"
#include "entlab/rollout.hpp"
#include "entlab/task.hpp"

namespace entlab {

/// Per-bucket slice of a MetricRecord. Statistics are over the groups that
/// landed in the bucket this iteration; `groups == 0` means no data.
struct BucketMetrics {
  int groups = 0;
  int trajectories = 0;
  double accuracy_mean = 0.0;
  double length_mean = 0.0;
  double nhe_mean = 0.0;
  double kl_ctrl = 0.0;
  double kappa = 0.0;
  double lambda = 0.0;
  double hwe_target = 0.0;
  double filtered_fraction = 0.0;
};

struct MetricRecord {
  int iteration = 0;
  AlgoMode mode = AlgoMode::aepo;
  bool skipped = false;  // every group was filtered, no update applied
  int groups = 0;
  int trajectories = 0;
  int branches = 0;
  double accuracy_mean = 0.0;
  double length_mean = 0.0;
  double nhe_mean = 0.0;
  double kl_ctrl = 0.0;
  double tau = 0.0;
  double filtered_fraction = 0.0;
  double loss = 0.0;
  double clipped_fraction = 0.0;
  int sampling_warnings = 0;
  std::array<BucketMetrics, 3> buckets{};
};

/// One prompt's rollouts after scoring. Trajectories [0, G) are the primary
/// samples; anything after them was branched.
struct ScoredGroup {
  TaskInstance task;
  std::vector<Trajectory> trajectories;
  std::vector<EntropyProfile> profiles;
  std::vector<double> rewards;
  std::vector<double> kl_ctrl;
  int pass_count = 0;
  Bucket bucket = Bucket::medium;
  bool retained = false;
};

struct TrainState {
  PolicyTable policy;
  AdamW optimizer;
  BucketState buckets;
  int iteration = 0;
  bool has_prev_tau = false;
  double prev_tau = 0.0;
};

/// Cold-start policy, fresh optimizer and bucket parameters from the config.
TrainState initial_state(const ExperimentConfig& config);

PolicyShape policy_shape(const ExperimentConfig& config);
TaskVocab task_vocab(const ExperimentConfig& config);
SemanticVocab semantic_vocab(const ExperimentConfig& config);
SamplingParams sampling_params(const ExperimentConfig& config);
ColdStartLogits cold_start_logits(const ExperimentConfig& config);

/// Draws the batch of tasks for an iteration from the configured mix.
std::vector<TaskInstance> sample_batch(const ExperimentConfig& config, int iteration);

/// One outer iteration: refresh old policy, rollouts with branch-at-trigger,
/// batch threshold, buckets, rewards, online filter, advantages, KL, actor
/// updates, controller and target updates. Advances state.iteration.
/// When `groups_out` is given it receives the scored groups of the batch.
MetricRecord train_step(const ExperimentConfig& config, TrainState& state,
                        std::vector<ScoredGroup>* groups_out = nullptr);

struct EvalBucket {
  int prompts = 0;
  double accuracy = 0.0;
  double length = 0.0;
};

/// Fixed evaluation set: `per_knob` tasks for every knob of the mix, bucketed
/// once by their pass count under the reference snapshot so that buckets do
/// not move as the policy learns.
struct EvalSet {
  std::vector<TaskInstance> tasks;
  std::vector<Bucket> buckets;
};

EvalSet make_eval_set(const ExperimentConfig& config, int per_knob, std::uint64_t seed);

/// Mean accuracy and response length per bucket over `samples` rollouts per
/// task with the current policy.
std::array<EvalBucket, 3> evaluate(const ExperimentConfig& config, const PolicyTable& policy, const EvalSet& set,
                                   int samples, std::uint64_t seed);

}  // namespace entlab
