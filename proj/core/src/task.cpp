#include "entlab/task.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "entlab/rng.hpp"

namespace entlab {

std::vector<Token> TaskVocab::connective_tokens() const {
  std::vector<Token> out;
  for (int t = num_digits(); t < vocab_size - 1; ++t) out.push_back(static_cast<Token>(t));
  return out;
}

void TaskVocab::validate() const {
  if (connectives < 1) throw std::invalid_argument("task vocabulary needs at least one connective");
  if (num_digits() < 3) throw std::invalid_argument("task vocabulary needs at least three digits");
}

namespace {

int mod(int a, int m) { return ((a % m) + m) % m; }

std::vector<int> unit_steps(int m) {
  std::vector<int> out;
  for (int s = 1; s < m; ++s)
    if (std::gcd(s, m) == 1) out.push_back(s);
  return out;
}

}  // namespace

TaskInstance make_task(int difficulty_knob, std::uint64_t seed, const TaskVocab& vocab) {
  vocab.validate();
  if (difficulty_knob < 1) throw std::invalid_argument("difficulty_knob must be >= 1");
  const int m = vocab.num_digits();
  const int n = std::min(difficulty_knob, m - 1);

  Rng rng(derive_seed(seed, 0x7a5c));
  const auto steps = unit_steps(m);
  const int s = steps[rng.below(steps.size())];

  const int y = mod(-n * s, m);
  const int x = mod(y - s, m);

  TaskInstance task;
  task.difficulty_knob = n;
  task.step = s;
  task.seed = seed;
  task.prompt = {static_cast<Token>(n - 1), static_cast<Token>(x), static_cast<Token>(y)};
  for (int j = 1; j <= n; ++j) task.gold_answer.push_back(static_cast<Token>(mod(y + j * s, m)));
  return task;
}

bool verify_response(const TaskInstance& task, std::span<const Token> response, const TaskVocab& vocab) {
  if (response.empty() || response.back() != vocab.stop()) return false;
  std::vector<Token> answer;
  for (std::size_t i = 0; i + 1 < response.size(); ++i) {
    const Token t = response[i];
    if (t == vocab.stop()) return false;
    if (vocab.is_connective(t)) continue;
    if (!vocab.is_digit(t)) return false;
    answer.push_back(t);
  }
  return answer == task.gold_answer;
}

bool verify(const TaskInstance& task, std::span<const Token> sequence, const TaskVocab& vocab) {
  if (sequence.size() < task.prompt.size()) return false;
  if (!std::equal(task.prompt.begin(), task.prompt.end(), sequence.begin())) return false;
  return verify_response(task, sequence.subspan(task.prompt.size()), vocab);
}

void apply_cold_start(PolicyTable& policy, const TaskVocab& vocab, const ColdStartLogits& logits) {
  vocab.validate();
  if (policy.vocab_size() != vocab.vocab_size) throw std::invalid_argument("policy/task vocabulary mismatch");
  if (policy.shape().context_order < 2) throw std::invalid_argument("cold start needs context_order >= 2");
  const int m = vocab.num_digits();
  const int v = vocab.vocab_size;
  const Token stop = vocab.stop();

  for (std::size_t ctx = 0; ctx < policy.num_contexts(); ++ctx) {
    const auto key = policy.decode_context(ctx);
    const int prev = key.symbols[key.symbols.size() - 2];
    const int last = key.symbols.back();
    auto row = policy.mutable_logits(ctx);
    std::fill(row.begin(), row.end(), 0.0);
    if (last == v) continue;  // BOS

    const auto t_last = static_cast<Token>(last);
    if (vocab.is_connective(t_last)) {
      for (Token t = 0; t < v; ++t) {
        if (t == stop) row[static_cast<std::size_t>(t)] = logits.reflect_stop;
        else if (vocab.is_connective(t)) row[static_cast<std::size_t>(t)] = logits.reflect_continue;
        else row[static_cast<std::size_t>(t)] = logits.reflect_digit;
      }
      continue;
    }
    if (!vocab.is_digit(t_last) || prev == v || !vocab.is_digit(static_cast<Token>(prev))) continue;

    if (last == 0) {
      for (Token t = 0; t < v; ++t) {
        if (t == stop) row[static_cast<std::size_t>(t)] = logits.end_stop;
        else if (vocab.is_connective(t)) row[static_cast<std::size_t>(t)] = logits.end_reflect;
        else row[static_cast<std::size_t>(t)] = logits.end_digit;
      }
    } else {
      const int next = mod(2 * last - prev, m);
      row[static_cast<std::size_t>(next)] = logits.chain;
    }
  }
  policy.freeze_reference();
  policy.refresh_old();
}

}  // namespace entlab
