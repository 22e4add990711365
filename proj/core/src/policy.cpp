#include "entlab/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace entlab {

void GradientTable::zero() { std::fill(values.begin(), values.end(), 0.0); }

void GradientTable::add_scaled(const GradientTable& other, double scale) {
  if (other.values.size() != values.size()) throw std::invalid_argument("gradient shape mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += scale * other.values[i];
}

double GradientTable::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

std::vector<double> softmax(std::span<const double> logits, double temperature) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double inv_t = 1.0 / temperature;
  double hi = -INFINITY;
  for (double z : logits) hi = std::max(hi, z * inv_t);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] * inv_t - hi);
    total += out[i];
  }
  for (double& p : out) p /= total;
  return out;
}

PolicyTable::PolicyTable(PolicyShape shape) : shape_(shape) {
  if (shape_.vocab_size < 2) throw std::invalid_argument("vocab_size must be at least 2");
  if (shape_.context_order < 1) throw std::invalid_argument("context_order must be positive");
  const std::size_t base = static_cast<std::size_t>(shape_.vocab_size) + 1;
  kgram_rows_ = 1;
  for (int i = 0; i < shape_.context_order; ++i) {
    if (kgram_rows_ > (std::size_t{1} << 40) / base) throw std::invalid_argument("context table too large");
    kgram_rows_ *= base;
  }
  rows_ = kgram_rows_ * (shape_.prompt_anchor ? static_cast<std::size_t>(shape_.vocab_size) : 1);
  const std::size_t n = rows_ * static_cast<std::size_t>(shape_.vocab_size);
  weights_.assign(n, 0.0);
  reference_.assign(n, 0.0);
  old_.assign(n, 0.0);
}

std::size_t PolicyTable::context_id(std::span<const Token> prefix) const {
  const auto v = static_cast<std::size_t>(shape_.vocab_size);
  const std::size_t bos = v;
  std::size_t id = 0;
  const auto k = static_cast<std::size_t>(shape_.context_order);
  for (std::size_t i = 0; i < k; ++i) {
    // position k-1-i counted back from the end
    const std::size_t back = k - i;
    std::size_t sym = bos;
    if (prefix.size() >= back) {
      const Token t = prefix[prefix.size() - back];
      if (t < 0 || static_cast<std::size_t>(t) >= v) throw std::out_of_range("token outside vocabulary");
      sym = static_cast<std::size_t>(t);
    }
    id = id * (v + 1) + sym;
  }
  if (shape_.prompt_anchor) {
    if (prefix.empty()) throw std::invalid_argument("anchored policy needs a nonempty prompt");
    const Token a = prefix.front();
    if (a < 0 || static_cast<std::size_t>(a) >= v) throw std::out_of_range("token outside vocabulary");
    id += static_cast<std::size_t>(a) * kgram_rows_;
  }
  return id;
}

PolicyTable::ContextKey PolicyTable::decode_context(std::size_t ctx) const {
  if (ctx >= rows_) throw std::out_of_range("context id " + std::to_string(ctx));
  const auto v = static_cast<std::size_t>(shape_.vocab_size);
  ContextKey key;
  key.anchor = static_cast<int>(ctx / kgram_rows_);
  std::size_t rest = ctx % kgram_rows_;
  key.symbols.assign(static_cast<std::size_t>(shape_.context_order), 0);
  for (std::size_t i = key.symbols.size(); i-- > 0;) {
    key.symbols[i] = static_cast<int>(rest % (v + 1));
    rest /= (v + 1);
  }
  return key;
}

const std::vector<double>& PolicyTable::table(Snapshot which) const {
  switch (which) {
    case Snapshot::reference: return reference_;
    case Snapshot::old: return old_;
    case Snapshot::current: break;
  }
  return weights_;
}

std::span<const double> PolicyTable::logits(std::size_t ctx, Snapshot which) const {
  if (ctx >= rows_) throw std::out_of_range("context id " + std::to_string(ctx));
  const auto v = static_cast<std::size_t>(shape_.vocab_size);
  return {table(which).data() + ctx * v, v};
}

std::span<double> PolicyTable::mutable_logits(std::size_t ctx) {
  if (ctx >= rows_) throw std::out_of_range("context id " + std::to_string(ctx));
  const auto v = static_cast<std::size_t>(shape_.vocab_size);
  return {weights_.data() + ctx * v, v};
}

std::vector<double> PolicyTable::probs(std::size_t ctx, Snapshot which, double temperature) const {
  return softmax(logits(ctx, which), temperature);
}

double PolicyTable::log_prob(std::size_t ctx, Token token, Snapshot which) const {
  const auto z = logits(ctx, which);
  double hi = -INFINITY;
  for (double x : z) hi = std::max(hi, x);
  double total = 0.0;
  for (double x : z) total += std::exp(x - hi);
  return z[static_cast<std::size_t>(token)] - hi - std::log(total);
}

void PolicyTable::freeze_reference() { reference_ = weights_; }
void PolicyTable::refresh_old() { old_ = weights_; }

void PolicyTable::load(std::vector<double> weights, std::vector<double> reference, std::vector<double> old) {
  if (weights.size() != weights_.size() || reference.size() != weights_.size() || old.size() != weights_.size())
    throw std::invalid_argument("policy table size mismatch on load");
  weights_ = std::move(weights);
  reference_ = std::move(reference);
  old_ = std::move(old);
}

}  // namespace entlab
