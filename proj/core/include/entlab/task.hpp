#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "entlab/policy.hpp"

namespace entlab {

/// Token layout of the synthetic task family: digits 0..M-1, then the
/// connective ("reasoning marker") tokens, then STOP as the last id.
struct TaskVocab {
  int vocab_size = 12;
  int connectives = 3;

  int num_digits() const { return vocab_size - 1 - connectives; }
  Token stop() const { return static_cast<Token>(vocab_size - 1); }
  bool is_digit(Token t) const { return t >= 0 && t < num_digits(); }
  bool is_connective(Token t) const { return t >= num_digits() && t < vocab_size - 1; }
  /// Tokens designated as reasoning triggers by the generator.
  std::vector<Token> connective_tokens() const;
  void validate() const;
};

/// A modular arithmetic chain. The prompt is [marker, x, y] where (x, y) are
/// two consecutive terms of a progression with unit step s modulo M and the
/// marker encodes the chain length. The gold answer continues the
/// progression until it first reaches 0, which takes exactly
/// `difficulty_knob` terms.
struct TaskInstance {
  std::vector<Token> prompt;
  std::vector<Token> gold_answer;
  int difficulty_knob = 1;
  int step = 1;
  std::uint64_t seed = 0;
};

/// Knobs are clamped to [1, M-1]: a unit-step chain visits every residue
/// once, and a knob of M would put the 0 inside the prompt.
TaskInstance make_task(int difficulty_knob, std::uint64_t seed, const TaskVocab& vocab = {});

/// Exact-suffix-match verifier over prompt ++ response. The response must
/// end at its first STOP; connective tokens are reasoning markers and are
/// skipped, and the digits that remain before STOP are the answer.
bool verify(const TaskInstance& task, std::span<const Token> sequence, const TaskVocab& vocab = {});
bool verify_response(const TaskInstance& task, std::span<const Token> response, const TaskVocab& vocab = {});

/// Logit levels for the analytic cold-start policy.
struct ColdStartLogits {
  double chain = 5.0;             // continue the progression
  double end_stop = 3.0;          // STOP right after the chain reaches 0
  double end_reflect = 3.0;       // open a reflection segment instead
  double end_digit = -4.0;        // spurious digit after 0
  double reflect_continue = 3.0;  // stay in the reflection segment
  double reflect_stop = 2.5;      // close reflection with STOP
  double reflect_digit = -6.0;    // spurious digit during reflection
};

/// Writes a difficulty-agnostic cold-start policy into `policy` (all three
/// snapshots). Contexts ending in two digits favour the chain continuation,
/// contexts ending at 0 choose between STOP and reflection, and contexts
/// ending in a connective continue or close the reflection.
void apply_cold_start(PolicyTable& policy, const TaskVocab& vocab, const ColdStartLogits& logits);

}  // namespace entlab
