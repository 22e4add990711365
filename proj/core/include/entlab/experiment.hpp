#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "entlab/config.hpp"
#include "entlab/curator.hpp"
#include "entlab/trainer.hpp"

namespace entlab {

inline constexpr int kCheckpointSchema = 1;
inline constexpr int kMetricsSchema = 1;

std::string metric_to_json(const MetricRecord& record);
MetricRecord metric_from_json(const std::string& line);

/// First line of every metrics log: the schema version and the resolved
/// config as key/value strings.
std::string metrics_header(const ExperimentConfig& config);
ExperimentConfig config_from_header(const std::string& line);

struct MetricsLog {
  ExperimentConfig config;
  std::vector<MetricRecord> records;
};
MetricsLog read_metrics(const std::string& path);

void save_checkpoint(const std::string& path, const ExperimentConfig& config, const TrainState& state);
/// Throws std::runtime_error on a schema mismatch.
std::pair<ExperimentConfig, TrainState> load_checkpoint(const std::string& path);

struct TrainOptions {
  std::string out_dir = "run";
  std::string resume_path;      // empty = fresh start
  std::optional<int> iterations;  // overrides the checkpoint's count on resume
  std::ostream* progress = nullptr;
};

/// Runs the configured iterations, writing metrics.jsonl (flushed per
/// iteration), checkpoint_<iter>.json every `checkpoint_every` iterations,
/// checkpoint_final.json, and optional trajectories_<iter>.jsonl dumps.
std::vector<MetricRecord> run_train(const ExperimentConfig& config, const TrainOptions& options);

/// report_global.csv plus report_easy.csv, report_medium.csv and
/// report_hard.csv. Returns the written paths.
std::vector<std::string> run_report(const std::string& metrics_path, const std::string& out_dir);

inline constexpr const char* kReportGlobalHeader =
    "iter,mode,skipped,accuracy_mean,length_mean,nhe_mean,kl_ctrl,tau,filtered_fraction,branches,loss";
inline constexpr const char* kReportBucketHeader =
    "iter,groups,accuracy_mean,length_mean,nhe_mean,kl_ctrl,kappa,lambda,hwe_target,filtered_fraction";
inline constexpr const char* kAnalysisHeader = "length,n_he,accuracy,bucket,target,deviation,lambda,entropy_term,total";

struct AnalyzeOptions {
  /// Per-bucket N_HE targets. A missing target uses the bucket's own mean,
  /// which makes its multiplier zero.
  std::array<std::optional<double>, 3> targets{};
};

/// Reads trajectory JSONL, groups consecutive records sharing a prompt,
/// and writes profiles.jsonl and analysis.csv. Returns the written paths.
std::vector<std::string> run_analyze(const std::string& trajectories_path, const std::string& out_dir,
                                     const ExperimentConfig& config, const AnalyzeOptions& options);

/// curated.jsonl and brackets.csv; diagnostics go to `diagnostics`.
std::vector<std::string> run_curate(const std::string& corpus_path, const std::string& out_dir,
                                    const CurateOptions& options, std::ostream* diagnostics = nullptr);

struct TheoryOptions {
  std::uint64_t seed = 1;
  long trials = 100000;
  long episodes = 100000;
  int hazard_instances = 10;
  int budget_pairs = 1000;
  int threads = 0;
};

struct TheoryOutcome {
  std::string json;  // the full report
  bool all_passed = false;
};

TheoryOutcome run_theory(const TheoryOptions& options);

}  // namespace entlab
