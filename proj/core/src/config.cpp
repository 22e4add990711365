#include "entlab/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace entlab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string format_double(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& key, const std::string& s) {
  double x = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw std::invalid_argument(key + ": not a number: " + s);
  return x;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& s) {
  Int x{};
  auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw std::invalid_argument(key + ": not an integer: " + s);
  return x;
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument(key + ": not a boolean: " + s);
}

struct Field {
  const char* name;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

template <typename T>
Field num(const char* name, T ExperimentConfig::*member) {
  if constexpr (std::is_same_v<T, double>) {
    return {name, [member](const ExperimentConfig& c) { return format_double(c.*member); },
            [member, name](ExperimentConfig& c, const std::string& s) { c.*member = parse_double(name, s); }};
  } else if constexpr (std::is_same_v<T, bool>) {
    return {name, [member](const ExperimentConfig& c) { return std::string(c.*member ? "true" : "false"); },
            [member, name](ExperimentConfig& c, const std::string& s) { c.*member = parse_bool(name, s); }};
  } else {
    return {name, [member](const ExperimentConfig& c) { return std::to_string(c.*member); },
            [member, name](ExperimentConfig& c, const std::string& s) { c.*member = parse_int<T>(name, s); }};
  }
}

Field str(const char* name, std::string ExperimentConfig::*member) {
  return {name, [member](const ExperimentConfig& c) { return c.*member; },
          [member](ExperimentConfig& c, const std::string& s) { c.*member = s; }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"mode", [](const ExperimentConfig& c) { return std::string(to_string(c.mode)); },
       [](ExperimentConfig& c, const std::string& s) { c.mode = parse_mode(s); }},
      {"reward_mode", [](const ExperimentConfig& c) { return std::string(to_string(c.reward_mode)); },
       [](ExperimentConfig& c, const std::string& s) {
         if (s == "canonical") c.reward_mode = RewardMode::canonical;
         else if (s == "encourage") c.reward_mode = RewardMode::encourage;
         else throw std::invalid_argument("reward_mode: expected canonical|encourage, got " + s);
       }},
      num("seed", &ExperimentConfig::seed),
      num("iterations", &ExperimentConfig::iterations),
      num("batch_size", &ExperimentConfig::batch_size),
      num("group_size", &ExperimentConfig::group_size),
      num("window", &ExperimentConfig::window),
      num("quantile", &ExperimentConfig::quantile),
      str("semantic_allowlist", &ExperimentConfig::semantic_allowlist),
      num("clip_low", &ExperimentConfig::clip_low),
      num("clip_high", &ExperimentConfig::clip_high),
      num("grpo_clip", &ExperimentConfig::grpo_clip),
      num("rho", &ExperimentConfig::rho),
      num("alpha_kappa", &ExperimentConfig::alpha_kappa),
      num("kappa_init", &ExperimentConfig::kappa_init),
      num("kappa_min", &ExperimentConfig::kappa_min),
      num("kappa_max", &ExperimentConfig::kappa_max),
      num("delta_easy", &ExperimentConfig::delta_easy),
      num("delta_medium", &ExperimentConfig::delta_medium),
      num("delta_hard", &ExperimentConfig::delta_hard),
      num("beta_easy", &ExperimentConfig::beta_easy),
      num("beta_medium", &ExperimentConfig::beta_medium),
      num("beta_hard", &ExperimentConfig::beta_hard),
      num("ema_decay", &ExperimentConfig::ema_decay),
      num("lambda_eps", &ExperimentConfig::lambda_eps),
      num("adv_eps", &ExperimentConfig::adv_eps),
      num("grpo_kl", &ExperimentConfig::grpo_kl),
      num("learning_rate", &ExperimentConfig::learning_rate),
      num("weight_decay", &ExperimentConfig::weight_decay),
      num("adam_beta1", &ExperimentConfig::adam_beta1),
      num("adam_beta2", &ExperimentConfig::adam_beta2),
      num("updates_per_iter", &ExperimentConfig::updates_per_iter),
      num("filter_low", &ExperimentConfig::filter_low),
      num("filter_high", &ExperimentConfig::filter_high),
      num("vocab_size", &ExperimentConfig::vocab_size),
      num("connectives", &ExperimentConfig::connectives),
      num("context_order", &ExperimentConfig::context_order),
      num("prompt_anchor", &ExperimentConfig::prompt_anchor),
      str("task_mix", &ExperimentConfig::task_mix),
      num("max_len", &ExperimentConfig::max_len),
      num("temperature", &ExperimentConfig::temperature),
      num("top_p", &ExperimentConfig::top_p),
      num("branching", &ExperimentConfig::branching),
      num("branches_per_trigger", &ExperimentConfig::branches_per_trigger),
      num("max_triggers", &ExperimentConfig::max_triggers),
      num("branches_join_group", &ExperimentConfig::branches_join_group),
      num("cold_chain", &ExperimentConfig::cold_chain),
      num("cold_end_stop", &ExperimentConfig::cold_end_stop),
      num("cold_end_reflect", &ExperimentConfig::cold_end_reflect),
      num("cold_end_digit", &ExperimentConfig::cold_end_digit),
      num("cold_reflect_continue", &ExperimentConfig::cold_reflect_continue),
      num("cold_reflect_stop", &ExperimentConfig::cold_reflect_stop),
      num("cold_reflect_digit", &ExperimentConfig::cold_reflect_digit),
      num("checkpoint_every", &ExperimentConfig::checkpoint_every),
      num("trajectory_dump_every", &ExperimentConfig::trajectory_dump_every),
      num("threads", &ExperimentConfig::threads),
  };
  return table;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

void require(bool ok, const char* key, const char* what) {
  if (!ok) throw std::invalid_argument(std::string(key) + ": " + what);
}

}  // namespace

AlgoMode parse_mode(const std::string& s) {
  if (s == "aepo") return AlgoMode::aepo;
  if (s == "grpo") return AlgoMode::grpo;
  if (s == "dapo") return AlgoMode::dapo;
  throw std::invalid_argument("mode: expected aepo|grpo|dapo, got " + s);
}

std::vector<MixEntry> ExperimentConfig::parsed_mix() const {
  std::vector<MixEntry> out;
  for (const auto& item : split(task_mix, ',')) {
    MixEntry e;
    const auto colon = item.find(':');
    e.knob = parse_int<int>("task_mix", trim(item.substr(0, colon)));
    if (colon != std::string::npos) e.weight = parse_double("task_mix", trim(item.substr(colon + 1)));
    out.push_back(e);
  }
  return out;
}

std::vector<int> ExperimentConfig::parsed_allowlist() const {
  std::vector<int> out;
  for (const auto& item : split(semantic_allowlist, ',')) out.push_back(parse_int<int>("semantic_allowlist", item));
  return out;
}

void ExperimentConfig::validate() const {
  require(iterations >= 0, "iterations", "must be >= 0");
  require(batch_size >= 1, "batch_size", "must be >= 1");
  require(group_size >= 2, "group_size", "must be >= 2");
  require(window >= 1, "window", "must be >= 1");
  require(quantile > 0.0 && quantile < 1.0, "quantile", "must lie in (0, 1)");
  require(clip_low > 0.0 && clip_low < 1.0, "clip_low", "must lie in (0, 1)");
  require(clip_high > 0.0 && clip_high < 1.0, "clip_high", "must lie in (0, 1)");
  require(grpo_clip > 0.0 && grpo_clip < 1.0, "grpo_clip", "must lie in (0, 1)");
  require(rho > 0.0 && rho < 1.0, "rho", "must lie in (0, 1)");
  require(alpha_kappa >= 0.0, "alpha_kappa", "must be >= 0");
  require(kappa_min > 0.0 && kappa_max >= kappa_min, "kappa_min", "need 0 < kappa_min <= kappa_max");
  require(kappa_init >= kappa_min && kappa_init <= kappa_max, "kappa_init", "must lie in [kappa_min, kappa_max]");
  require(delta_easy > 0.0 && delta_medium > 0.0 && delta_hard > 0.0, "delta_easy", "KL budgets must be positive");
  require(beta_easy > 0.0 && beta_medium > 0.0 && beta_hard > 0.0, "beta_easy", "KL bases must be positive");
  require(ema_decay >= 0.0 && ema_decay < 1.0, "ema_decay", "must lie in [0, 1)");
  require(lambda_eps > 0.0, "lambda_eps", "must be positive");
  require(adv_eps >= 0.0, "adv_eps", "must be >= 0");
  require(learning_rate > 0.0, "learning_rate", "must be positive");
  require(weight_decay >= 0.0, "weight_decay", "must be >= 0");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0, "adam_beta1", "must lie in [0, 1)");
  require(adam_beta2 >= 0.0 && adam_beta2 < 1.0, "adam_beta2", "must lie in [0, 1)");
  require(updates_per_iter >= 1, "updates_per_iter", "must be >= 1");
  require(filter_low < filter_high, "filter_low", "must be below filter_high");
  require(vocab_size >= 6, "vocab_size", "must be >= 6");
  require(connectives >= 1 && vocab_size - 1 - connectives >= 3, "connectives", "need >= 1 connective and >= 3 digits");
  require(context_order >= 2 && context_order <= 6, "context_order", "must lie in [2, 6]");
  require(max_len >= 1, "max_len", "must be >= 1");
  require(temperature > 0.0, "temperature", "must be positive");
  require(top_p > 0.0 && top_p <= 1.0, "top_p", "must lie in (0, 1]");
  require(branches_per_trigger >= 0, "branches_per_trigger", "must be >= 0");
  require(max_triggers >= 0, "max_triggers", "must be >= 0");
  require(checkpoint_every >= 0, "checkpoint_every", "must be >= 0");
  require(trajectory_dump_every >= 0, "trajectory_dump_every", "must be >= 0");
  require(threads >= 0, "threads", "must be >= 0");
  const auto mix = parsed_mix();
  require(!mix.empty(), "task_mix", "must list at least one knob");
  double total = 0.0;
  for (const auto& e : mix) {
    require(e.knob >= 1, "task_mix", "knobs must be >= 1");
    require(e.weight >= 0.0 && std::isfinite(e.weight), "task_mix", "weights must be finite and >= 0");
    total += e.weight;
  }
  require(total > 0.0, "task_mix", "weights must not all be zero");
  for (int t : parsed_allowlist()) {
    require(t >= 0 && t < vocab_size - 1, "semantic_allowlist", "ids must be tokens other than STOP");
  }
}

std::map<std::string, std::string> config_entries(const ExperimentConfig& config) {
  std::map<std::string, std::string> out;
  for (const auto& f : fields()) out[f.name] = f.get(config);
  return out;
}

std::string to_text(const ExperimentConfig& config) {
  std::ostringstream out;
  for (const auto& f : fields()) out << f.name << " = " << f.get(config) << '\n';
  return out.str();
}

void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (key == f.name) {
      f.set(config, value);
      return;
    }
  }
  throw std::invalid_argument("unknown config key: " + key);
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(lineno) + ": missing '='");
    set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace entlab
