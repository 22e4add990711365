#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "entlab/rollout.hpp"

namespace entlab {

/// JSONL record with fields {prompt, tokens, logprobs, entropies, accuracy,
/// seed}. Step distributions and context ids are not persisted.
std::string trajectory_to_json(const Trajectory& trajectory);
Trajectory trajectory_from_json(const std::string& line);

void write_trajectories(std::ostream& out, const std::vector<Trajectory>& trajectories);
std::vector<Trajectory> read_trajectories(std::istream& in);
std::vector<Trajectory> read_trajectories(const std::string& path);

}  // namespace entlab
