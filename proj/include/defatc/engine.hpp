#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <map>
#include <vector>

#include "defatc/compression.hpp"
#include "defatc/model.hpp"
#include "defatc/topology.hpp"

namespace defatc {

/// Everything immutable during a run: graph, subspace, mixing matrix,
/// data model, and the reference optimum the errors are measured against.
/// Safe to share read-only across concurrent Monte Carlo runs.
struct Problem {
  NetworkTopology topology;
  SubspaceBasis basis;
  CombinationMatrix combination;
  LinearRegressionModel model;
  GroundTruth truth;
};

enum class Algorithm { Atc, DefAtc, DefAtcNoEf };

std::string algorithm_name(Algorithm algorithm);

/// Per-agent iterates. phi holds the reconstructed predictors for every
/// neighbor in N_k (own agent included); the broadcast protocol keeps all
/// copies of a given phi_l identical across receivers.
struct AgentState {
  int agent = 0;
  Eigen::VectorXd w;
  Eigen::VectorXd psi;
  Eigen::VectorXd z;
  std::map<int, Eigen::VectorXd> phi;

  const Eigen::VectorXd& phi_self() const { return phi.at(agent); }
};

struct RunParams {
  Algorithm algorithm = Algorithm::DefAtc;
  double mu = 0.0;
  double zeta = 1.0;
  double gamma = 1.0;
  // One spec applied to all agents, or one per agent.
  std::vector<OperatorSpec> operators;

  const OperatorSpec& operator_for(int k) const {
    return operators.size() == 1 ? operators[0] : operators.at(k);
  }
};

void validate_run_params(const RunParams& params, const Problem& problem);

/// Everything is zero at iteration 0.
std::vector<AgentState> initial_states(const Problem& problem);

/// Optional per-iteration internals, captured for bookkeeping tests and
/// level dumps.
struct IterationDebug {
  std::vector<Eigen::VectorXd> chi;
  std::vector<Eigen::VectorXd> delta;
  std::vector<std::optional<std::vector<long long>>> levels;
};

/// One synchronous round of Algorithm DEF-ATC (or its no-error-feedback
/// ablation): adapt, compress-and-broadcast, reconstruct, combine. Fills
/// bits_out with the exact per-agent transmission cost. All agents read
/// previous-iteration state only.
void def_atc_iteration(std::vector<AgentState>& states, const Problem& problem,
                       const RunParams& params, std::vector<Rng>& data_rngs,
                       std::vector<Rng>& compression_rngs,
                       std::vector<double>& bits_out,
                       IterationDebug* debug = nullptr);

/// Uncompressed adapt-then-combine. Charges the full-precision budget
/// M_k * B_HP per agent.
void atc_iteration(std::vector<AgentState>& states, const Problem& problem,
                   const RunParams& params, std::vector<Rng>& data_rngs,
                   std::vector<double>& bits_out);

struct RunOptions {
  long iterations = 0;
  std::uint64_t seed = 1;
  bool record_agent_bits = false;
  bool record_agent_sq_err = false;
  std::ostream* level_dump = nullptr;  // CSV lines: iteration,agent,levels...
};

/// A single realization: the network MSD and bit-rate curves, indexed by
/// iteration (entry 0 is the initial state; rate[0] = 0).
struct RunTrace {
  std::vector<double> msd;
  std::vector<double> rate;  // average bits per node per component
  Eigen::MatrixXd agent_bits;    // iterations x K when recorded
  Eigen::MatrixXd agent_sq_err;  // (iterations+1) x K when recorded
  std::uint64_t seed = 0;
};

/// Runs `iterations` rounds; deterministic given the seed. Throws
/// DivergenceError (with iteration, agent and magnitude) when any state
/// component passes the divergence threshold.
RunTrace run_experiment(const Problem& problem, const RunParams& params,
                        const RunOptions& options);

/// Rng streams used by run_experiment, exposed so tests can replay the
/// exact sample sequences.
Rng data_stream(std::uint64_t seed, int agent);
Rng compression_stream(std::uint64_t seed, int agent);

constexpr double kDivergenceThreshold = 1e8;

/// Declared iteration-count rule: enough rounds for steady state across a
/// step-size sweep, T = ceil(12 / (mu * min_k 2 sigma_u_k^2)).
long default_iterations(const LinearRegressionModel& model, double mu);

}  // namespace defatc
