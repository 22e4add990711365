#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace entlab {

struct CandidateResponse {
  std::string response_id;
  std::int64_t length = 0;  // token count, precomputed upstream
};

/// One corpus line: {problem_id, source, pass_rate, responses: [{text_len, response_id}]}.
struct CorpusProblem {
  std::string problem_id;
  std::string source;
  double pass_rate = 0.0;
  std::vector<CandidateResponse> responses;
};

struct LengthAnchors {
  double l0 = 0.0;  // median length at pass rate 0
  double l1 = 0.0;  // median length at pass rate 1
};

/// Lower-middle median, so even counts stay on an observed integer length.
std::int64_t lower_median(std::vector<std::int64_t> values);

/// Per-source medians of response lengths at pass rates exactly 0 and 1,
/// pooled over all candidates. Sources missing either extreme are left out
/// and described in `diagnostics`.
std::map<std::string, LengthAnchors> length_anchors(const std::vector<CorpusProblem>& corpus,
                                                    std::vector<std::string>* diagnostics = nullptr);

/// (1 - p) * L0 + p * L1. Rejects p outside [0, 1] and nonpositive anchors.
double target_length(double p, double l0, double l1);

/// Equal-width bracket index, p = 1 falls in the last bracket.
int bracket_of(double p, int brackets);

/// Index of the candidate closest to `target`; ties go to the shorter
/// response, then to the lexicographically first id.
std::size_t choose_response(const std::vector<CandidateResponse>& responses, double target);

struct CuratedEntry {
  std::string problem_id;
  std::string source;
  double pass_rate = 0.0;
  int bracket = 0;
  std::string response_id;
  std::int64_t length = 0;
  double target = 0.0;
};

struct BracketSummary {
  int bracket = 0;
  int available = 0;
  int count = 0;
  double mean_length = 0.0;
  double mean_target = 0.0;
};

struct CurateOptions {
  int brackets = 9;
  int quota = 0;  // per bracket; <= 0 takes the smallest nonempty bracket size
  std::uint64_t seed = 1;
};

struct CuratedCorpus {
  std::vector<CuratedEntry> entries;
  std::map<std::string, LengthAnchors> anchors;
  std::vector<BracketSummary> brackets;
  std::vector<std::string> diagnostics;
};

/// Brackets problems by pass rate, picks the closest-to-target response for
/// each, and draws up to `quota` problems per bracket by seeded shuffle.
/// Output is ordered by bracket, then source, then problem id.
CuratedCorpus select_responses(const std::vector<CorpusProblem>& corpus, const CurateOptions& options);

std::vector<CorpusProblem> read_corpus(std::istream& in);
void write_curated(std::ostream& out, const CuratedCorpus& curated);
void write_bracket_summary(std::ostream& out, const CuratedCorpus& curated);

}  // namespace entlab
