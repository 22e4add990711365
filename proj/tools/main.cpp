// entlab: train, curate, analyze, theory, report.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "entlab/config.hpp"
#include "entlab/experiment.hpp"

namespace {

struct ConfigFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string mode;
  std::vector<std::string> overrides;
  bool print_config = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "flat key = value config file");
    app->add_option("--seed", seed, "root seed");
    app->add_option("--mode", mode, "algorithm")->check(CLI::IsMember({"aepo", "grpo", "dapo"}));
    app->add_option("--set", overrides, "extra key=value override, repeatable");
    app->add_flag("--print-config", print_config, "print the resolved config and exit");
  }

  entlab::ExperimentConfig resolve() const {
    entlab::ExperimentConfig c = config_path.empty() ? entlab::ExperimentConfig{} : entlab::load_config(config_path);
    if (seed) c.seed = *seed;
    if (!mode.empty()) c.mode = entlab::parse_mode(mode);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got " + kv);
      entlab::set_config_value(c, kv.substr(0, eq), kv.substr(eq + 1));
    }
    c.validate();
    return c;
  }
};

void print_paths(const std::vector<std::string>& paths) {
  for (const auto& p : paths) std::cout << p << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entlab: window-entropy exploration, hierarchical reward shaping and KL-controlled policy optimisation"};
  app.require_subcommand(0, 1);
  bool top_print = false;
  app.add_flag("--print-config", top_print, "print every default config value and exit");

  ConfigFlags train_flags;
  std::string train_out = "run";
  std::string resume;
  std::optional<int> iterations;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "run policy optimisation and write metrics and checkpoints");
  train_flags.attach(train);
  train->add_option("--out", train_out, "output directory");
  train->add_option("--resume", resume, "checkpoint to continue from (its embedded config is used)");
  train->add_option("--iterations", iterations, "total iteration count, also applies on resume");
  train->add_flag("--quiet", quiet, "no per-iteration progress");

  std::string corpus;
  std::string curate_out = "curated";
  entlab::CurateOptions curate_opts;
  auto* curate = app.add_subcommand("curate", "select cold-start responses by pass-rate bracket and target length");
  curate->add_option("--input", corpus, "corpus JSONL")->required();
  curate->add_option("--out", curate_out, "output directory");
  curate->add_option("--brackets", curate_opts.brackets, "number of equal-width pass-rate brackets");
  curate->add_option("--quota", curate_opts.quota, "problems per bracket, 0 = smallest nonempty bracket");
  curate->add_option("--seed", curate_opts.seed, "subsampling seed");

  ConfigFlags analyze_flags;
  std::string traj;
  std::string analyze_out = "analysis";
  std::optional<double> t_easy, t_medium, t_hard;
  auto* analyze = app.add_subcommand("analyze", "entropy profiles and shaped rewards for trajectory JSONL");
  analyze_flags.attach(analyze);
  analyze->add_option("--input", traj, "trajectory JSONL")->required();
  analyze->add_option("--out", analyze_out, "output directory");
  analyze->add_option("--target-easy", t_easy, "N_HE target for the easy bucket");
  analyze->add_option("--target-medium", t_medium, "N_HE target for the medium bucket");
  analyze->add_option("--target-hard", t_hard, "N_HE target for the hard bucket");

  entlab::TheoryOptions theory_opts;
  std::string theory_out = "theory";
  auto* theory = app.add_subcommand("theory", "numerical checks of the variance, renewal and KL-budget results");
  theory->add_option("--seed", theory_opts.seed, "root seed");
  theory->add_option("--out", theory_out, "output directory");
  theory->add_option("--trials", theory_opts.trials, "Monte Carlo trials for variance checks");
  theory->add_option("--episodes", theory_opts.episodes, "episodes per renewal / hazard setting");
  theory->add_option("--threads", theory_opts.threads, "worker threads, 0 = all cores");

  std::string metrics;
  std::string report_out = "report";
  auto* report = app.add_subcommand("report", "per-bucket and global CSV series from a metrics log");
  report->add_option("--input", metrics, "metrics JSONL")->required();
  report->add_option("--out", report_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (top_print || app.get_subcommands().empty()) {
      if (!top_print) {
        std::cerr << app.help();
        return 2;
      }
      std::cout << entlab::to_text(entlab::ExperimentConfig{});
      return 0;
    }

    if (train->parsed()) {
      entlab::ExperimentConfig config = train_flags.resolve();
      if (iterations) config.iterations = *iterations;
      if (train_flags.print_config) {
        std::cout << entlab::to_text(config);
        return 0;
      }
      entlab::TrainOptions opt;
      opt.out_dir = train_out;
      opt.resume_path = resume;
      opt.iterations = iterations;
      if (!quiet) opt.progress = &std::cerr;
      const auto records = entlab::run_train(config, opt);
      std::cout << "wrote " << records.size() << " metric records to "
                << (std::filesystem::path(train_out) / "metrics.jsonl").string() << '\n';
      return 0;
    }
    if (curate->parsed()) {
      print_paths(entlab::run_curate(corpus, curate_out, curate_opts, &std::cerr));
      return 0;
    }
    if (analyze->parsed()) {
      const auto config = analyze_flags.resolve();
      if (analyze_flags.print_config) {
        std::cout << entlab::to_text(config);
        return 0;
      }
      entlab::AnalyzeOptions opt;
      opt.targets = {t_easy, t_medium, t_hard};
      print_paths(entlab::run_analyze(traj, analyze_out, config, opt));
      return 0;
    }
    if (theory->parsed()) {
      const auto outcome = entlab::run_theory(theory_opts);
      std::filesystem::create_directories(theory_out);
      const auto path = std::filesystem::path(theory_out) / "theory_report.json";
      std::ofstream out(path);
      if (!out) throw std::runtime_error("cannot write " + path.string());
      out << outcome.json << '\n';
      std::cout << path.string() << '\n' << (outcome.all_passed ? "all checks passed" : "some checks failed") << '\n';
      return 0;
    }
    if (report->parsed()) {
      print_paths(entlab::run_report(metrics, report_out));
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "entlab: invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "entlab: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
