#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace defatc {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid adjacency structure (asymmetry, missing self-loops, disconnected graph).
struct TopologyError : Error {
  using Error::Error;
};

/// A constructed combination matrix failed its own validity conditions.
struct ConstructionError : Error {
  using Error::Error;
};

/// Non-finite data fed to an operator.
struct InputError : Error {
  using Error::Error;
};

/// Invalid configuration. Carries the full list of validation issues,
/// each prefixed with the offending field path.
struct ConfigError : Error {
  explicit ConfigError(std::vector<std::string> issues_in)
      : Error(join(issues_in)), issues(std::move(issues_in)) {}
  explicit ConfigError(const std::string& issue)
      : ConfigError(std::vector<std::string>{issue}) {}

  std::vector<std::string> issues;

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "configuration invalid:";
    for (const auto& s : v) out += "\n  - " + s;
    return out;
  }
};

/// An iterate exceeded the divergence threshold.
struct DivergenceError : Error {
  DivergenceError(long iteration_in, int agent_in, double magnitude_in)
      : Error("divergence at iteration " + std::to_string(iteration_in) +
              ", agent " + std::to_string(agent_in) + ", magnitude " +
              std::to_string(magnitude_in)),
        iteration(iteration_in),
        agent(agent_in),
        magnitude(magnitude_in) {}

  long iteration;
  int agent;
  double magnitude;
};

/// One or more Monte Carlo runs diverged; lists the failing run seeds.
struct MonteCarloError : Error {
  MonteCarloError(std::string what_in, std::vector<std::uint64_t> seeds)
      : Error(std::move(what_in)), failed_seeds(std::move(seeds)) {}

  std::vector<std::uint64_t> failed_seeds;
};

}  // namespace defatc
