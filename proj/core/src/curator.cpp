#include "entlab/curator.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "entlab/rng.hpp"
#include "json.hpp"

namespace entlab {

std::int64_t lower_median(std::vector<std::int64_t> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

std::map<std::string, LengthAnchors> length_anchors(const std::vector<CorpusProblem>& corpus,
                                                    std::vector<std::string>* diagnostics) {
  std::map<std::string, std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>>> lengths;
  for (const auto& p : corpus) {
    auto& slot = lengths[p.source];
    if (p.pass_rate == 0.0)
      for (const auto& r : p.responses) slot.first.push_back(r.length);
    if (p.pass_rate == 1.0)
      for (const auto& r : p.responses) slot.second.push_back(r.length);
  }
  std::map<std::string, LengthAnchors> out;
  for (const auto& [source, ls] : lengths) {
    if (ls.first.empty() || ls.second.empty()) {
      if (diagnostics)
        diagnostics->push_back("source '" + source + "' rejected: no responses at pass rate " +
                               (ls.first.empty() ? "0" : "1"));
      continue;
    }
    out[source] = LengthAnchors{static_cast<double>(lower_median(ls.first)), static_cast<double>(lower_median(ls.second))};
  }
  return out;
}

double target_length(double p, double l0, double l1) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("pass rate outside [0, 1]");
  if (!(l0 > 0.0 && l1 > 0.0)) throw std::invalid_argument("length anchors must be positive");
  return (1.0 - p) * l0 + p * l1;
}

int bracket_of(double p, int brackets) {
  if (brackets < 2) throw std::invalid_argument("need at least two brackets");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("pass rate outside [0, 1]");
  return std::min(static_cast<int>(std::floor(p * brackets)), brackets - 1);
}

std::size_t choose_response(const std::vector<CandidateResponse>& responses, double target) {
  if (responses.empty()) throw std::invalid_argument("problem has no candidate responses");
  std::size_t best = 0;
  for (std::size_t i = 1; i < responses.size(); ++i) {
    const auto& a = responses[i];
    const auto& b = responses[best];
    const double da = std::abs(static_cast<double>(a.length) - target);
    const double db = std::abs(static_cast<double>(b.length) - target);
    if (da < db || (da == db && (a.length < b.length || (a.length == b.length && a.response_id < b.response_id))))
      best = i;
  }
  return best;
}

CuratedCorpus select_responses(const std::vector<CorpusProblem>& corpus, const CurateOptions& options) {
  if (options.brackets < 2) throw std::invalid_argument("need at least two brackets");
  CuratedCorpus out;
  out.anchors = length_anchors(corpus, &out.diagnostics);

  std::vector<std::vector<CuratedEntry>> by_bracket(static_cast<std::size_t>(options.brackets));
  for (const auto& p : corpus) {
    const auto a = out.anchors.find(p.source);
    if (a == out.anchors.end()) continue;
    if (p.responses.empty()) {
      out.diagnostics.push_back("problem '" + p.problem_id + "' has no responses");
      continue;
    }
    CuratedEntry e;
    e.problem_id = p.problem_id;
    e.source = p.source;
    e.pass_rate = p.pass_rate;
    e.bracket = bracket_of(p.pass_rate, options.brackets);
    e.target = target_length(p.pass_rate, a->second.l0, a->second.l1);
    const auto& r = p.responses[choose_response(p.responses, e.target)];
    e.response_id = r.response_id;
    e.length = r.length;
    by_bracket[static_cast<std::size_t>(e.bracket)].push_back(std::move(e));
  }

  auto order = [](const CuratedEntry& a, const CuratedEntry& b) {
    return std::tie(a.source, a.problem_id) < std::tie(b.source, b.problem_id);
  };
  int quota = options.quota;
  if (quota <= 0) {
    quota = 0;
    for (const auto& b : by_bracket)
      if (!b.empty()) quota = quota == 0 ? static_cast<int>(b.size()) : std::min(quota, static_cast<int>(b.size()));
  }

  for (int k = 0; k < options.brackets; ++k) {
    auto& entries = by_bracket[static_cast<std::size_t>(k)];
    BracketSummary s;
    s.bracket = k;
    s.available = static_cast<int>(entries.size());
    std::sort(entries.begin(), entries.end(), order);
    Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(k)));
    for (std::size_t i = entries.size(); i > 1; --i) std::swap(entries[i - 1], entries[rng.below(i)]);
    if (static_cast<int>(entries.size()) > quota) entries.resize(static_cast<std::size_t>(quota));
    std::sort(entries.begin(), entries.end(), order);
    if (entries.empty()) out.diagnostics.push_back("bracket " + std::to_string(k) + " is empty");
    else if (static_cast<int>(entries.size()) < quota)
      out.diagnostics.push_back("bracket " + std::to_string(k) + " filled " + std::to_string(entries.size()) + " of " +
                                std::to_string(quota));
    s.count = static_cast<int>(entries.size());
    for (const auto& e : entries) {
      s.mean_length += static_cast<double>(e.length);
      s.mean_target += e.target;
    }
    if (s.count > 0) {
      s.mean_length /= s.count;
      s.mean_target /= s.count;
    }
    out.brackets.push_back(s);
    for (auto& e : entries) out.entries.push_back(std::move(e));
  }
  return out;
}

std::vector<CorpusProblem> read_corpus(std::istream& in) {
  std::vector<CorpusProblem> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      CorpusProblem p;
      p.problem_id = j.at("problem_id").get<std::string>();
      p.source = j.at("source").get<std::string>();
      p.pass_rate = j.at("pass_rate").get<double>();
      for (const auto& r : j.at("responses"))
        p.responses.push_back({r.at("response_id").get<std::string>(), r.at("text_len").get<std::int64_t>()});
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("corpus line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_curated(std::ostream& out, const CuratedCorpus& curated) {
  for (const auto& e : curated.entries) {
    nlohmann::ordered_json j;
    j["problem_id"] = e.problem_id;
    j["source"] = e.source;
    j["pass_rate"] = e.pass_rate;
    j["bracket"] = e.bracket;
    j["response_id"] = e.response_id;
    j["length"] = e.length;
    j["target"] = e.target;
    out << j.dump() << '\n';
  }
}

void write_bracket_summary(std::ostream& out, const CuratedCorpus& curated) {
  out << "bracket,count,mean_chosen_length,mean_target\n";
  for (const auto& s : curated.brackets) {
    nlohmann::json ml = s.mean_length;
    nlohmann::json mt = s.mean_target;
    out << s.bracket << ',' << s.count << ',' << ml.dump() << ',' << mt.dump() << '\n';
  }
}

}  // namespace entlab
