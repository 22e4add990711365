#include "entlab/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "entlab/entropy.hpp"
#include "entlab/reward.hpp"
#include "entlab/theory.hpp"
#include "entlab/trajectory_io.hpp"
#include "json.hpp"

namespace entlab {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string num(double x) { return nlohmann::json(x).dump(); }

ojson bucket_to_json(const BucketMetrics& b) {
  ojson j;
  j["groups"] = b.groups;
  j["trajectories"] = b.trajectories;
  j["accuracy_mean"] = b.accuracy_mean;
  j["length_mean"] = b.length_mean;
  j["nhe_mean"] = b.nhe_mean;
  j["kl_ctrl"] = b.kl_ctrl;
  j["kappa"] = b.kappa;
  j["lambda"] = b.lambda;
  j["hwe_target"] = b.hwe_target;
  j["filtered_fraction"] = b.filtered_fraction;
  return j;
}

BucketMetrics bucket_from_json(const nlohmann::json& j) {
  BucketMetrics b;
  b.groups = j.at("groups").get<int>();
  b.trajectories = j.at("trajectories").get<int>();
  b.accuracy_mean = j.at("accuracy_mean").get<double>();
  b.length_mean = j.at("length_mean").get<double>();
  b.nhe_mean = j.at("nhe_mean").get<double>();
  b.kl_ctrl = j.at("kl_ctrl").get<double>();
  b.kappa = j.at("kappa").get<double>();
  b.lambda = j.at("lambda").get<double>();
  b.hwe_target = j.at("hwe_target").get<double>();
  b.filtered_fraction = j.at("filtered_fraction").get<double>();
  return b;
}

ojson params_to_json(const BucketParams& p) {
  ojson j;
  j["hwe_target"] = p.hwe_target;
  j["has_target"] = p.has_target;
  j["lambda"] = p.lambda;
  j["kl_base"] = p.kl_base;
  j["kappa"] = p.kappa;
  j["kl_budget"] = p.kl_budget;
  return j;
}

BucketParams params_from_json(const nlohmann::json& j) {
  BucketParams p;
  p.hwe_target = j.at("hwe_target").get<double>();
  p.has_target = j.at("has_target").get<bool>();
  p.lambda = j.at("lambda").get<double>();
  p.kl_base = j.at("kl_base").get<double>();
  p.kappa = j.at("kappa").get<double>();
  p.kl_budget = j.at("kl_budget").get<double>();
  return p;
}

}  // namespace

std::string metric_to_json(const MetricRecord& r) {
  ojson j;
  j["iter"] = r.iteration;
  j["mode"] = std::string(to_string(r.mode));
  j["skipped"] = r.skipped;
  j["groups"] = r.groups;
  j["trajectories"] = r.trajectories;
  j["branches"] = r.branches;
  j["accuracy_mean"] = r.accuracy_mean;
  j["length_mean"] = r.length_mean;
  j["nhe_mean"] = r.nhe_mean;
  j["kl_ctrl"] = r.kl_ctrl;
  j["tau"] = r.tau;
  j["filtered_fraction"] = r.filtered_fraction;
  j["loss"] = r.loss;
  j["clipped_fraction"] = r.clipped_fraction;
  j["sampling_warnings"] = r.sampling_warnings;
  ojson buckets;
  for (Bucket b : kBuckets) buckets[std::string(to_string(b))] = bucket_to_json(r.buckets[index(b)]);
  j["buckets"] = std::move(buckets);
  return j.dump();
}

MetricRecord metric_from_json(const std::string& line) {
  MetricRecord r;
  try {
    const auto j = nlohmann::json::parse(line);
    r.iteration = j.at("iter").get<int>();
    r.mode = parse_mode(j.at("mode").get<std::string>());
    r.skipped = j.at("skipped").get<bool>();
    r.groups = j.at("groups").get<int>();
    r.trajectories = j.at("trajectories").get<int>();
    r.branches = j.at("branches").get<int>();
    r.accuracy_mean = j.at("accuracy_mean").get<double>();
    r.length_mean = j.at("length_mean").get<double>();
    r.nhe_mean = j.at("nhe_mean").get<double>();
    r.kl_ctrl = j.at("kl_ctrl").get<double>();
    r.tau = j.at("tau").get<double>();
    r.filtered_fraction = j.at("filtered_fraction").get<double>();
    r.loss = j.at("loss").get<double>();
    r.clipped_fraction = j.at("clipped_fraction").get<double>();
    r.sampling_warnings = j.at("sampling_warnings").get<int>();
    for (Bucket b : kBuckets) r.buckets[index(b)] = bucket_from_json(j.at("buckets").at(std::string(to_string(b))));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad metrics record: ") + e.what());
  }
  return r;
}

std::string metrics_header(const ExperimentConfig& config) {
  ojson j;
  j["schema_version"] = kMetricsSchema;
  ojson cfg;
  for (const auto& [k, v] : config_entries(config)) cfg[k] = v;
  j["config"] = std::move(cfg);
  return j.dump();
}

ExperimentConfig config_from_header(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  if (!j.contains("config")) throw std::invalid_argument("metrics log has no config header");
  if (j.value("schema_version", 0) != kMetricsSchema) throw std::runtime_error("unsupported metrics schema version");
  ExperimentConfig c;
  for (const auto& [k, v] : j.at("config").items()) set_config_value(c, k, v.get<std::string>());
  return c;
}

MetricsLog read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  MetricsLog log;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (first) {
      first = false;
      if (line.find("\"config\"") != std::string::npos) {
        log.config = config_from_header(line);
        continue;
      }
    }
    log.records.push_back(metric_from_json(line));
  }
  return log;
}

void save_checkpoint(const std::string& path, const ExperimentConfig& config, const TrainState& state) {
  ojson j;
  j["schema_version"] = kCheckpointSchema;
  j["config"] = to_text(config);
  j["iteration"] = state.iteration;
  j["has_prev_tau"] = state.has_prev_tau;
  j["prev_tau"] = state.prev_tau;
  ojson pol;
  const auto& p = state.policy;
  pol["vocab_size"] = p.shape().vocab_size;
  pol["context_order"] = p.shape().context_order;
  pol["prompt_anchor"] = p.shape().prompt_anchor;
  pol["weights"] = std::vector<double>(p.weights().begin(), p.weights().end());
  pol["reference"] = std::vector<double>(p.reference_weights().begin(), p.reference_weights().end());
  pol["old"] = std::vector<double>(p.old_weights().begin(), p.old_weights().end());
  j["policy"] = std::move(pol);
  ojson adam;
  adam["steps"] = state.optimizer.steps();
  adam["m"] = state.optimizer.first_moment();
  adam["v"] = state.optimizer.second_moment();
  j["adam"] = std::move(adam);
  ojson b;
  b["ema_decay"] = state.buckets.ema_decay;
  b["kappa_min"] = state.buckets.kappa_min;
  b["kappa_max"] = state.buckets.kappa_max;
  for (Bucket k : kBuckets) b[std::string(to_string(k))] = params_to_json(state.buckets[k]);
  j["buckets"] = std::move(b);

  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    auto out = open_out(tmp);
    out << j.dump() << '\n';
  }
  fs::rename(tmp, target);
}

std::pair<ExperimentConfig, TrainState> load_checkpoint(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint " + path + " is not valid JSON: " + e.what());
  }
  const int schema = j.value("schema_version", -1);
  if (schema != kCheckpointSchema)
    throw std::runtime_error("checkpoint schema version " + std::to_string(schema) + " is not supported (expected " +
                             std::to_string(kCheckpointSchema) + ")");
  try {
    ExperimentConfig config = parse_config(j.at("config").get<std::string>());
    TrainState state = initial_state(config);
    const auto& pol = j.at("policy");
    if (pol.at("vocab_size").get<int>() != config.vocab_size ||
        pol.at("context_order").get<int>() != config.context_order ||
        pol.at("prompt_anchor").get<bool>() != config.prompt_anchor)
      throw std::runtime_error("checkpoint policy shape does not match its config");
    state.policy.load(pol.at("weights").get<std::vector<double>>(), pol.at("reference").get<std::vector<double>>(),
                      pol.at("old").get<std::vector<double>>());
    const auto& adam = j.at("adam");
    state.optimizer.restore(adam.at("steps").get<std::int64_t>(), adam.at("m").get<std::vector<double>>(),
                            adam.at("v").get<std::vector<double>>());
    const auto& b = j.at("buckets");
    state.buckets.ema_decay = b.at("ema_decay").get<double>();
    state.buckets.kappa_min = b.at("kappa_min").get<double>();
    state.buckets.kappa_max = b.at("kappa_max").get<double>();
    for (Bucket k : kBuckets) state.buckets[k] = params_from_json(b.at(std::string(to_string(k))));
    state.iteration = j.at("iteration").get<int>();
    state.has_prev_tau = j.at("has_prev_tau").get<bool>();
    state.prev_tau = j.at("prev_tau").get<double>();
    return {config, std::move(state)};
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint " + path + " is malformed: " + e.what());
  }
}

std::vector<MetricRecord> run_train(const ExperimentConfig& input, const TrainOptions& options) {
  ExperimentConfig config = input;
  TrainState state = [&] {
    if (options.resume_path.empty()) {
      config.validate();
      return initial_state(config);
    }
    auto [cfg, st] = load_checkpoint(options.resume_path);
    config = cfg;
    return std::move(st);
  }();
  if (options.iterations) config.iterations = *options.iterations;
  config.validate();

  const fs::path dir(options.out_dir);
  fs::create_directories(dir);
  auto metrics = open_out(dir / "metrics.jsonl");
  metrics << metrics_header(config) << '\n';
  metrics.flush();

  std::vector<MetricRecord> records;
  while (state.iteration < config.iterations) {
    const int it = state.iteration;
    const bool dump = config.trajectory_dump_every > 0 && it % config.trajectory_dump_every == 0;
    std::vector<ScoredGroup> groups;
    auto rec = train_step(config, state, dump ? &groups : nullptr);
    metrics << metric_to_json(rec) << '\n';
    metrics.flush();
    if (dump) {
      auto out = open_out(dir / ("trajectories_" + std::to_string(it) + ".jsonl"));
      for (const auto& g : groups) write_trajectories(out, g.trajectories);
    }
    if (options.progress)
      *options.progress << "iter " << it << " acc " << rec.accuracy_mean << " len " << rec.length_mean << " nhe "
                         << rec.nhe_mean << " kl " << rec.kl_ctrl << (rec.skipped ? " skipped" : "") << '\n';
    records.push_back(rec);
    if (config.checkpoint_every > 0 && state.iteration % config.checkpoint_every == 0)
      save_checkpoint((dir / ("checkpoint_" + std::to_string(state.iteration) + ".json")).string(), config, state);
  }
  save_checkpoint((dir / "checkpoint_final.json").string(), config, state);
  return records;
}

std::vector<std::string> run_report(const std::string& metrics_path, const std::string& out_dir) {
  const auto log = read_metrics(metrics_path);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  std::vector<std::string> written;

  const auto global_path = dir / "report_global.csv";
  {
    auto out = open_out(global_path);
    out << kReportGlobalHeader << '\n';
    for (const auto& r : log.records)
      out << r.iteration << ',' << to_string(r.mode) << ',' << (r.skipped ? 1 : 0) << ',' << num(r.accuracy_mean)
          << ',' << num(r.length_mean) << ',' << num(r.nhe_mean) << ',' << num(r.kl_ctrl) << ',' << num(r.tau) << ','
          << num(r.filtered_fraction) << ',' << r.branches << ',' << num(r.loss) << '\n';
  }
  written.push_back(global_path.string());

  for (Bucket b : kBuckets) {
    const auto path = dir / ("report_" + std::string(to_string(b)) + ".csv");
    auto out = open_out(path);
    out << kReportBucketHeader << '\n';
    for (const auto& r : log.records) {
      const auto& m = r.buckets[index(b)];
      out << r.iteration << ',' << m.groups << ',';
      if (m.groups > 0)
        out << num(m.accuracy_mean) << ',' << num(m.length_mean) << ',' << num(m.nhe_mean) << ',' << num(m.kl_ctrl);
      else
        out << ",,,";
      out << ',' << num(m.kappa) << ',' << num(m.lambda) << ',' << num(m.hwe_target) << ',';
      if (m.groups > 0) out << num(m.filtered_fraction);
      out << '\n';
    }
    written.push_back(path.string());
  }
  return written;
}

std::vector<std::string> run_analyze(const std::string& trajectories_path, const std::string& out_dir,
                                     const ExperimentConfig& config, const AnalyzeOptions& options) {
  const auto trajectories = read_trajectories(trajectories_path);
  if (trajectories.empty()) throw std::invalid_argument("no trajectories in " + trajectories_path);
  for (const auto& t : trajectories)
    if (t.tokens.empty()) throw std::invalid_argument("trajectory with no tokens in " + trajectories_path);
  const auto sem = semantic_vocab(config);

  std::vector<std::vector<double>> ents;
  for (const auto& t : trajectories) ents.push_back(t.entropies);
  const double tau = batch_threshold(ents, config.quantile);

  // consecutive records with the same prompt form one group
  std::vector<std::size_t> group_of(trajectories.size());
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    if (i == 0 || trajectories[i].prompt != trajectories[i - 1].prompt) groups.emplace_back();
    groups.back().push_back(i);
    group_of[i] = groups.size() - 1;
  }

  std::vector<EntropyProfile> profiles;
  for (const auto& t : trajectories)
    profiles.push_back(hwe_detect(t.tokens, t.entropies, tau, config.window, sem, HweMode::window));

  std::vector<Bucket> bucket_of_group;
  BucketBatch batch;
  for (const auto& g : groups) {
    std::vector<int> acc;
    for (std::size_t i : g) acc.push_back(trajectories[i].accuracy);
    const Bucket b = assign_bucket(pass_count(acc), static_cast<int>(g.size()));
    bucket_of_group.push_back(b);
    for (std::size_t i : g) batch[b].push_back(profiles[i].hwe_count);
  }
  std::array<double, 3> target{};
  std::array<double, 3> lambda{};
  for (Bucket b : kBuckets) {
    const auto& obs = batch[b];
    if (obs.empty()) continue;
    const double mean = std::accumulate(obs.begin(), obs.end(), 0.0) / static_cast<double>(obs.size());
    double var = 0.0;
    for (double x : obs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(obs.size());
    target[index(b)] = options.targets[index(b)].value_or(mean);
    lambda[index(b)] = lagrange_multiplier(mean, target[index(b)], var, config.lambda_eps);
  }

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  const auto prof_path = dir / "profiles.jsonl";
  const auto csv_path = dir / "analysis.csv";
  auto prof = open_out(prof_path);
  auto csv = open_out(csv_path);
  csv << kAnalysisHeader << '\n';
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto& t = trajectories[i];
    const auto& p = profiles[i];
    const Bucket b = bucket_of_group[group_of[i]];
    ojson j;
    j["index"] = i;
    j["group"] = group_of[i];
    j["bucket"] = std::string(to_string(b));
    j["length"] = t.length();
    j["accuracy"] = t.accuracy;
    j["tau"] = tau;
    j["window_size"] = p.window_size;
    j["token_entropies"] = p.token_entropies;
    j["window_means"] = p.window_means;
    std::vector<int> mask(p.hwe_mask.begin(), p.hwe_mask.end());
    std::vector<int> counted(p.counted_mask.begin(), p.counted_mask.end());
    j["hwe_mask"] = mask;
    j["counted_mask"] = counted;
    j["hwe_count"] = p.hwe_count;
    prof << j.dump() << '\n';

    const double d = deviation(p.hwe_count, target[index(b)]);
    const auto sr = hierarchical_reward(t.accuracy, d, b, lambda[index(b)], config.reward_mode);
    csv << t.length() << ',' << p.hwe_count << ',' << t.accuracy << ',' << to_string(b) << ','
        << num(target[index(b)]) << ',' << num(sr.deviation) << ',' << num(sr.lambda) << ',' << num(sr.entropy_term)
        << ',' << num(sr.total) << '\n';
  }
  return {prof_path.string(), csv_path.string()};
}

std::vector<std::string> run_curate(const std::string& corpus_path, const std::string& out_dir,
                                    const CurateOptions& options, std::ostream* diagnostics) {
  std::ifstream in(corpus_path);
  if (!in) throw std::runtime_error("cannot open " + corpus_path);
  const auto corpus = read_corpus(in);
  const auto curated = select_responses(corpus, options);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  const auto jsonl = dir / "curated.jsonl";
  const auto csv = dir / "brackets.csv";
  {
    auto out = open_out(jsonl);
    write_curated(out, curated);
  }
  {
    auto out = open_out(csv);
    write_bracket_summary(out, curated);
  }
  if (diagnostics)
    for (const auto& d : curated.diagnostics) *diagnostics << d << '\n';
  return {jsonl.string(), csv.string()};
}

TheoryOutcome run_theory(const TheoryOptions& o) {
  ojson checks = ojson::array();
  bool all = true;
  auto add = [&](ojson c) {
    all = all && c.at("pass").get<bool>();
    checks.push_back(std::move(c));
  };
  const auto bern = [](Rng& r) { return r.bernoulli(0.5) ? 1.0 : 0.0; };

  for (int n : {8, 2}) {
    const auto v = group_variance_check(n, bern, o.trials, derive_seed(o.seed, {1, static_cast<std::uint64_t>(n)}));
    ojson c;
    c["name"] = "group_baseline_variance";
    c["n"] = n;
    c["trials"] = v.trials;
    c["var_a"] = v.var_a;
    c["var_r"] = v.var_r;
    c["ratio"] = v.ratio;
    c["expected_ratio"] = v.expected_ratio;
    c["rel_error"] = v.rel_error;
    c["tolerance"] = 0.02;
    c["pass"] = v.rel_error <= 0.02;
    add(std::move(c));
  }

  const auto independent = [](Rng& r) {
    return std::pair<double, double>{r.bernoulli(0.5) ? 1.0 : 0.0, -std::log(1.0 - r.uniform())};
  };
  for (double kappa : {0.5, 1.0, 2.0}) {
    const auto v = kl_penalty_inflation_check(8, kappa, independent, o.trials,
                                              derive_seed(o.seed, {2, static_cast<std::uint64_t>(kappa * 100)}));
    const double expected = 7.0 / 8.0 * kappa * kappa;  // sigma_K^2 = 1 for Exp(1)
    const double rel = std::abs(v.diff - expected) / expected;
    ojson c;
    c["name"] = "kl_penalty_inflation_independent";
    c["kappa"] = kappa;
    c["trials"] = v.trials;
    c["diff"] = v.diff;
    c["expected"] = expected;
    c["predicted_empirical"] = v.predicted;
    c["cov_sk"] = v.cov_sk;
    c["rel_error"] = rel;
    c["tolerance"] = 0.05;
    c["pass"] = rel <= 0.05;
    add(std::move(c));
  }
  {
    const auto correlated = [](Rng& r) {
      const double s = r.normal();
      return std::pair<double, double>{s, s + 0.5 * r.normal()};
    };
    const auto v = kl_penalty_inflation_check(8, 1.0, correlated, o.trials, derive_seed(o.seed, {2, 999}));
    ojson c;
    c["name"] = "kl_penalty_inflation_correlated";
    c["kappa"] = 1.0;
    c["interval_upper"] = 2.0 * v.cov_sk / v.sigma_k2;
    c["diff"] = v.diff;
    c["predicted_empirical"] = v.predicted;
    c["rel_error"] = v.rel_error;
    c["tolerance"] = 0.05;
    c["pass"] = v.diff < 0.0 && v.rel_error <= 0.05;
    add(std::move(c));
  }

  {
    std::vector<double> el, enhe;
    ojson points = ojson::array();
    for (int k = 0; k < 10; ++k) {
      TwoStateProcess p{0.5, 0.2, 0.09 * k, 0.1, 0.05};
      const auto s = renewal_simulate(p, o.episodes, derive_seed(o.seed, {3, static_cast<std::uint64_t>(k)}), o.threads);
      std::vector<double> l, n;
      for (const auto& x : s) {
        l.push_back(static_cast<double>(x.length));
        n.push_back(static_cast<double>(x.nhe));
      }
      const auto ml = estimate_mean(l);
      const auto mn = estimate_mean(n);
      el.push_back(ml.mean);
      enhe.push_back(mn.mean);
      points.push_back({{"entry", p.entry}, {"mean_length", ml.mean}, {"se_length", ml.se}, {"mean_nhe", mn.mean}});
    }
    const auto fit = linear_fit(enhe, el);
    ojson c;
    c["name"] = "renewal_linearity";
    c["episodes_per_point"] = o.episodes;
    c["points"] = std::move(points);
    c["slope"] = fit.slope;
    c["intercept"] = fit.intercept;
    c["r2"] = fit.r2;
    c["tolerance"] = 0.99;
    c["pass"] = fit.r2 >= 0.99 && fit.slope > 0.0;
    add(std::move(c));
  }
  {
    TwoStateProcess p{0.4, 0.15, 0.5, 0.0, 0.0};
    const auto s = renewal_simulate(p, o.episodes, derive_seed(o.seed, {4}), o.threads);
    long mismatches = 0;
    for (const auto& x : s) mismatches += x.nhe != x.reasoning ? 1 : 0;
    ojson c;
    c["name"] = "renewal_perfect_detector";
    c["episodes"] = o.episodes;
    c["mismatches"] = mismatches;
    c["pass"] = mismatches == 0;
    add(std::move(c));
  }
  {
    TwoStateProcess p{1.0, 0.25, 0.0, 0.0, 0.0};
    const auto s = renewal_simulate(p, o.episodes, derive_seed(o.seed, {5}), o.threads);
    std::vector<double> l;
    for (const auto& x : s) l.push_back(static_cast<double>(x.length));
    const auto ml = estimate_mean(l);
    ojson c;
    c["name"] = "renewal_geometric_stopping";
    c["mean_length"] = ml.mean;
    c["expected"] = 1.0 / p.h;
    c["se"] = ml.se;
    c["pass"] = std::abs(ml.mean - 1.0 / p.h) <= 3.0 * ml.se;
    add(std::move(c));
  }

  for (int k = 0; k < o.hazard_instances; ++k) {
    Rng r(derive_seed(o.seed, {6, static_cast<std::uint64_t>(k)}));
    HazardModel hz;
    hz.hi = 0.2 + 0.6 * r.uniform();
    hz.lo = 0.02 + (hz.hi - 0.02) * r.uniform();
    hz.center = 0.5 + r.uniform();
    hz.steepness = 0.5 + 4.5 * r.uniform();
    EntropyPathModel paths{0.0, 2.0, 0.1 + 0.9 * r.uniform()};
    const double theta = 0.2 + 1.6 * r.uniform();
    const auto h = hazard_dominance_check(hz, paths, theta, o.episodes, derive_seed(o.seed, {7, static_cast<std::uint64_t>(k)}));
    auto path_json = [](const HazardPathStats& s) {
      return ojson{{"mean_length", s.mean_length}, {"mean_nhe", s.mean_nhe}, {"bound", s.bound},
                   {"slack", s.slack},             {"slack_se", s.slack_se}, {"bound_ok", s.bound_ok},
                   {"wald_mean", s.wald_mean},     {"wald_se", s.wald_se}};
    };
    ojson c;
    c["name"] = "hazard_dominance";
    c["instance"] = k;
    c["hazard"] = {{"hi", hz.hi}, {"lo", hz.lo}, {"center", hz.center}, {"steepness", hz.steepness}};
    c["shift"] = paths.shift;
    c["theta"] = theta;
    c["lambda_theta"] = h.lambda_theta;
    c["episodes"] = h.episodes;
    c["length_gap"] = h.length_gap;
    c["gap_se"] = h.gap_se;
    c["dominance_ok"] = h.dominance_ok;
    c["low_path"] = path_json(h.low_path);
    c["high_path"] = path_json(h.high_path);
    c["tolerance_se"] = 3.0;
    c["pass"] = h.dominance_ok && h.low_path.bound_ok && h.high_path.bound_ok;
    add(std::move(c));
  }

  {
    const auto b = budget_bounds_check(o.budget_pairs, 16, 1.0, derive_seed(o.seed, {8}));
    ojson c;
    c["name"] = "kl_budget_bounds";
    c["pairs"] = b.pairs;
    c["alphabet"] = b.alphabet;
    c["pinsker_violations"] = b.pinsker_violations;
    c["dv_violations"] = b.dv_violations;
    c["worst_pinsker_margin"] = b.worst_pinsker_margin;
    c["worst_dv_margin"] = b.worst_dv_margin;
    c["tolerance"] = b.slack;
    c["pass"] = b.pinsker_violations == 0 && b.dv_violations == 0;
    add(std::move(c));
  }

  ojson report;
  report["schema_version"] = 1;
  report["seed"] = o.seed;
  report["trials"] = o.trials;
  report["episodes"] = o.episodes;
  report["checks"] = std::move(checks);
  report["all_passed"] = all;
  return {report.dump(2), all};
}

}  // namespace entlab
