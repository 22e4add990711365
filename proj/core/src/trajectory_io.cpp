#include "entlab/trajectory_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace entlab {

std::string trajectory_to_json(const Trajectory& t) {
  nlohmann::ordered_json j;
  j["prompt"] = t.prompt;
  j["tokens"] = t.tokens;
  j["logprobs"] = t.logprobs;
  j["entropies"] = t.entropies;
  j["accuracy"] = t.accuracy;
  j["seed"] = t.seed;
  return j.dump();
}

Trajectory trajectory_from_json(const std::string& line) {
  Trajectory t;
  try {
    const auto j = nlohmann::json::parse(line);
    t.prompt = j.at("prompt").get<std::vector<Token>>();
    t.tokens = j.at("tokens").get<std::vector<Token>>();
    t.logprobs = j.at("logprobs").get<std::vector<double>>();
    t.entropies = j.at("entropies").get<std::vector<double>>();
    t.accuracy = j.at("accuracy").get<int>();
    t.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad trajectory record: ") + e.what());
  }
  if (t.logprobs.size() != t.tokens.size() || t.entropies.size() != t.tokens.size())
    throw std::invalid_argument("bad trajectory record: per-step arrays differ in length");
  return t;
}

void write_trajectories(std::ostream& out, const std::vector<Trajectory>& trajectories) {
  for (const auto& t : trajectories) out << trajectory_to_json(t) << '\n';
}

std::vector<Trajectory> read_trajectories(std::istream& in) {
  std::vector<Trajectory> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(trajectory_from_json(line));
  }
  return out;
}

std::vector<Trajectory> read_trajectories(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_trajectories(in);
}

}  // namespace entlab
