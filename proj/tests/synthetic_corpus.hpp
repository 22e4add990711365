#pragma once

#include <string>
#include <vector>

#include "entlab/curator.hpp"
#include "entlab/rng.hpp"

namespace synth {

/// `n` problems over two sources, pass rates on the 1/8 grid, 1-6 candidates
/// each with lengths in [50, 5000]. Both sources get both extremes.
inline std::vector<entlab::CorpusProblem> corpus(int n, std::uint64_t seed) {
  entlab::Rng rng(seed);
  std::vector<entlab::CorpusProblem> out;
  for (int i = 0; i < n; ++i) {
    entlab::CorpusProblem p;
    p.problem_id = "p" + std::to_string(i);
    p.source = i % 2 == 0 ? "alpha" : "beta";
    p.pass_rate = i < 4 ? (i < 2 ? 0.0 : 1.0) : static_cast<double>(rng.below(9)) / 8.0;
    const int k = 1 + static_cast<int>(rng.below(6));
    for (int j = 0; j < k; ++j)
      p.responses.push_back({p.problem_id + "-r" + std::to_string(j), 50 + static_cast<std::int64_t>(rng.below(4951))});
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace synth
