#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "entlab/aepo.hpp"
#include "entlab/reward.hpp"

namespace entlab {

/// Knob value and its sampling weight in the task mix.
struct MixEntry {
  int knob = 1;
  double weight = 1.0;
};

/// Every tunable of a training run. Serialises to a flat `key = value` text
/// file; `to_text` followed by `parse_config` is lossless.
struct ExperimentConfig {
  AlgoMode mode = AlgoMode::aepo;
  RewardMode reward_mode = RewardMode::canonical;
  std::uint64_t seed = 1;
  int iterations = 200;
  int batch_size = 16;
  int group_size = 8;

  // entropy probe
  int window = 4;
  double quantile = 0.95;
  std::string semantic_allowlist;  // comma-separated ids, empty = the task's connectives

  // optimisation
  double clip_low = 0.2;
  double clip_high = 0.28;
  double grpo_clip = 0.2;
  double rho = 0.5;
  double alpha_kappa = 0.05;
  double kappa_init = 1.0;
  double kappa_min = 0.1;
  double kappa_max = 10.0;
  double delta_easy = 0.01;
  double delta_medium = 0.02;
  double delta_hard = 0.04;
  double beta_easy = 0.01;
  double beta_medium = 0.01;
  double beta_hard = 0.01;
  double ema_decay = 0.9;
  double lambda_eps = 1e-8;
  double adv_eps = 1e-6;
  bool grpo_kl = true;
  double learning_rate = 0.05;
  double weight_decay = 0.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  int updates_per_iter = 4;
  double filter_low = 0.01;
  double filter_high = 0.99;

  // policy and tasks
  int vocab_size = 12;
  int connectives = 3;
  int context_order = 2;
  bool prompt_anchor = true;
  std::string task_mix = "1:1,2:1,3:1,4:1,5:1,6:1,7:1";

  // sampling and branching
  int max_len = 24;
  double temperature = 1.0;
  double top_p = 0.99;
  bool branching = true;
  int branches_per_trigger = 1;
  int max_triggers = 1;
  bool branches_join_group = true;

  // cold start
  double cold_chain = 5.0;
  double cold_end_stop = 3.0;
  double cold_end_reflect = 3.0;
  double cold_end_digit = -4.0;
  double cold_reflect_continue = 3.0;
  double cold_reflect_stop = 2.5;
  double cold_reflect_digit = -6.0;

  // harness
  int checkpoint_every = 50;
  int trajectory_dump_every = 0;
  int threads = 0;

  /// Throws std::invalid_argument naming the first offending key.
  void validate() const;
  std::vector<MixEntry> parsed_mix() const;
  std::vector<int> parsed_allowlist() const;
};

std::string to_text(const ExperimentConfig& config);
/// Parses `key = value` lines (# comments, blank lines allowed) on top of
/// the defaults. Unknown keys are an error.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Applies one `key=value` override.
void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);
std::map<std::string, std::string> config_entries(const ExperimentConfig& config);

AlgoMode parse_mode(const std::string& s);

}  // namespace entlab
