#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace entlab {

using Token = std::int32_t;

/// Geometry of a tabular policy. A context is the last `context_order`
/// tokens of (prompt ++ response-so-far), left-padded with a virtual BOS.
/// With `prompt_anchor` set, the first prompt token is folded into the
/// context as well, so a policy can condition on what kind of question it
/// is answering.
struct PolicyShape {
  int vocab_size = 12;
  int context_order = 2;
  bool prompt_anchor = true;
};

/// Dense table of per-context values, same layout as the policy weights.
struct GradientTable {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  GradientTable() = default;
  GradientTable(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  std::span<double> row(std::size_t ctx) { return {values.data() + ctx * cols, cols}; }
  std::span<const double> row(std::size_t ctx) const { return {values.data() + ctx * cols, cols}; }
  void zero();
  void add_scaled(const GradientTable& other, double scale);
  double max_abs() const;
};

enum class Snapshot { current, reference, old };

/// Tabular-softmax autoregressive policy with a frozen reference copy and an
/// old-policy copy used for importance ratios. Rows start at zero (uniform).
class PolicyTable {
 public:
  explicit PolicyTable(PolicyShape shape = {});

  const PolicyShape& shape() const { return shape_; }
  int vocab_size() const { return shape_.vocab_size; }
  Token stop_token() const { return static_cast<Token>(shape_.vocab_size - 1); }
  std::size_t num_contexts() const { return rows_; }

  /// Context id for predicting the token that follows `prefix`.
  /// `prefix` is prompt ++ generated tokens and must be nonempty when the
  /// policy is prompt-anchored.
  std::size_t context_id(std::span<const Token> prefix) const;

  struct ContextKey {
    int anchor = 0;            // first prompt token, 0 when unanchored
    std::vector<int> symbols;  // oldest first; vocab_size marks BOS padding
  };
  ContextKey decode_context(std::size_t ctx) const;

  std::span<const double> logits(std::size_t ctx, Snapshot which = Snapshot::current) const;
  std::span<double> mutable_logits(std::size_t ctx);

  /// softmax(logits / temperature) for one context.
  std::vector<double> probs(std::size_t ctx, Snapshot which = Snapshot::current,
                            double temperature = 1.0) const;
  double log_prob(std::size_t ctx, Token token, Snapshot which = Snapshot::current) const;

  std::span<const double> weights() const { return weights_; }
  std::span<double> mutable_weights() { return weights_; }
  std::span<const double> reference_weights() const { return reference_; }
  std::span<const double> old_weights() const { return old_; }

  /// Copies current weights into the reference snapshot (stage start).
  void freeze_reference();
  /// Copies current weights into the old-policy snapshot (iteration start).
  void refresh_old();
  /// Restores all three tables, e.g. from a checkpoint.
  void load(std::vector<double> weights, std::vector<double> reference, std::vector<double> old);

  GradientTable make_gradient() const { return GradientTable(rows_, static_cast<std::size_t>(shape_.vocab_size)); }

 private:
  const std::vector<double>& table(Snapshot which) const;

  PolicyShape shape_;
  std::size_t kgram_rows_ = 0;
  std::size_t rows_ = 0;
  std::vector<double> weights_;
  std::vector<double> reference_;
  std::vector<double> old_;
};

std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0);

}  // namespace entlab
