#include "defatc/engine.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "defatc/errors.hpp"

namespace defatc {

namespace {

constexpr std::uint64_t kDataTag = 0x64617461ULL;         // "data"
constexpr std::uint64_t kCompressionTag = 0x636f6d70ULL;  // "comp"

void check_finite_bounded(const std::vector<AgentState>& states,
                          long iteration) {
  for (const auto& st : states) {
    double magnitude = st.w.cwiseAbs().maxCoeff();
    magnitude = std::max(magnitude, st.z.cwiseAbs().maxCoeff());
    magnitude = std::max(magnitude, st.phi_self().cwiseAbs().maxCoeff());
    if (!std::isfinite(magnitude) || magnitude > kDivergenceThreshold)
      throw DivergenceError(iteration, st.agent, magnitude);
  }
}

}  // namespace

std::string algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Atc: return "atc";
    case Algorithm::DefAtc: return "def-atc";
    case Algorithm::DefAtcNoEf: return "def-atc-no-ef";
  }
  return "unknown";
}

void validate_run_params(const RunParams& params, const Problem& problem) {
  std::vector<std::string> issues;
  if (!(params.mu > 0.0)) issues.push_back("mu must be positive");
  if (!(params.zeta > 0.0 && params.zeta <= 1.0))
    issues.push_back("zeta must be in (0, 1]");
  if (!(params.gamma > 0.0 && params.gamma <= 1.0))
    issues.push_back("gamma must be in (0, 1]");
  const auto n_ops = params.operators.size();
  if (n_ops != 1 && n_ops != static_cast<std::size_t>(problem.topology.agents))
    issues.push_back("operator list must have one entry or one per agent");
  if (!issues.empty()) throw ConfigError(issues);
  for (int k = 0; k < problem.topology.agents; ++k)
    validate_spec(params.operator_for(k), problem.topology.dims[k]);
}

std::vector<AgentState> initial_states(const Problem& problem) {
  const auto& topo = problem.topology;
  std::vector<AgentState> states(topo.agents);
  for (int k = 0; k < topo.agents; ++k) {
    auto& st = states[k];
    st.agent = k;
    st.w = Eigen::VectorXd::Zero(topo.dims[k]);
    st.psi = Eigen::VectorXd::Zero(topo.dims[k]);
    st.z = Eigen::VectorXd::Zero(topo.dims[k]);
    for (int l : topo.neighbors(k))
      st.phi[l] = Eigen::VectorXd::Zero(topo.dims[l]);
  }
  return states;
}

void def_atc_iteration(std::vector<AgentState>& states, const Problem& problem,
                       const RunParams& params, std::vector<Rng>& data_rngs,
                       std::vector<Rng>& compression_rngs,
                       std::vector<double>& bits_out,
                       IterationDebug* debug) {
  const auto& topo = problem.topology;
  const int agents = topo.agents;
  const bool error_feedback = params.algorithm != Algorithm::DefAtcNoEf;
  bits_out.assign(agents, 0.0);
  if (debug) {
    debug->chi.resize(agents);
    debug->delta.resize(agents);
    debug->levels.resize(agents);
  }

  // Adapt: self-learning step on the previous-iteration estimate.
  for (int k = 0; k < agents; ++k) {
    const Sample s = sample(problem.model, k, data_rngs[k]);
    states[k].psi =
        states[k].w -
        (params.mu / params.zeta) * stochastic_gradient(states[k].w, s.u, s.d);
  }

  // Compress and broadcast: each agent encodes its error-compensated
  // difference exactly once; the same delta reaches every receiver.
  std::vector<Eigen::VectorXd> delta(agents);
  for (int k = 0; k < agents; ++k) {
    Eigen::VectorXd chi = states[k].psi - states[k].phi_self();
    if (error_feedback) chi += states[k].z;
    CompressedMessage msg =
        compress(params.operator_for(k), chi, compression_rngs[k]);
    bits_out[k] = msg.bits;
    if (error_feedback) states[k].z = chi - msg.values;
    if (debug) {
      debug->chi[k] = std::move(chi);
      debug->levels[k] = std::move(msg.levels);
    }
    delta[k] = std::move(msg.values);
    if (debug) debug->delta[k] = delta[k];
  }

  // Reconstruction: every receiver (sender included) advances its stored
  // predictor copy by the same damped step.
  for (int k = 0; k < agents; ++k)
    for (auto& [l, phi] : states[k].phi) phi += params.zeta * delta[l];

  // Combine: mix the locally reconstructed predictors.
  for (int k = 0; k < agents; ++k) {
    Eigen::VectorXd mixed = Eigen::VectorXd::Zero(topo.dims[k]);
    for (const auto& [l, phi] : states[k].phi)
      mixed.noalias() += problem.combination.a.block(topo.offset(k),
                                                     topo.offset(l),
                                                     topo.dims[k],
                                                     topo.dims[l]) *
                         phi;
    states[k].w = (1.0 - params.gamma) * states[k].phi_self() +
                  params.gamma * mixed;
  }
}

void atc_iteration(std::vector<AgentState>& states, const Problem& problem,
                   const RunParams& params, std::vector<Rng>& data_rngs,
                   std::vector<double>& bits_out) {
  const auto& topo = problem.topology;
  const int agents = topo.agents;
  const int b_hp = params.operators.empty() ? 32 : params.operators[0].b_hp;
  bits_out.assign(agents, 0.0);

  for (int k = 0; k < agents; ++k) {
    const Sample s = sample(problem.model, k, data_rngs[k]);
    states[k].psi =
        states[k].w -
        params.mu * stochastic_gradient(states[k].w, s.u, s.d);
    bits_out[k] = static_cast<double>(topo.dims[k]) * b_hp;
  }
  for (int k = 0; k < agents; ++k) {
    Eigen::VectorXd mixed = Eigen::VectorXd::Zero(topo.dims[k]);
    for (int l : topo.neighbors(k))
      mixed.noalias() += problem.combination.a.block(topo.offset(k),
                                                     topo.offset(l),
                                                     topo.dims[k],
                                                     topo.dims[l]) *
                         states[l].psi;
    states[k].w = mixed;
  }
}

Rng data_stream(std::uint64_t seed, int agent) {
  return Rng(derive_seed(seed, {kDataTag, static_cast<std::uint64_t>(agent)}));
}

Rng compression_stream(std::uint64_t seed, int agent) {
  return Rng(
      derive_seed(seed, {kCompressionTag, static_cast<std::uint64_t>(agent)}));
}

long default_iterations(const LinearRegressionModel& model, double mu) {
  double lambda_proxy =
      2.0 * *std::min_element(model.sigma_u_sq.begin(), model.sigma_u_sq.end());
  return static_cast<long>(std::ceil(12.0 / (mu * lambda_proxy)));
}

RunTrace run_experiment(const Problem& problem, const RunParams& params,
                        const RunOptions& options) {
  validate_run_params(params, problem);
  if (options.iterations < 0)
    throw ConfigError("iterations must be non-negative");

  const auto& topo = problem.topology;
  const int agents = topo.agents;
  const long total = options.iterations;

  std::vector<Rng> data_rngs, compression_rngs;
  data_rngs.reserve(agents);
  compression_rngs.reserve(agents);
  for (int k = 0; k < agents; ++k) {
    data_rngs.push_back(data_stream(options.seed, k));
    compression_rngs.push_back(compression_stream(options.seed, k));
  }

  std::vector<AgentState> states = initial_states(problem);

  RunTrace trace;
  trace.seed = options.seed;
  trace.msd.resize(total + 1);
  trace.rate.assign(total + 1, 0.0);
  if (options.record_agent_bits)
    trace.agent_bits = Eigen::MatrixXd::Zero(total, agents);
  if (options.record_agent_sq_err)
    trace.agent_sq_err = Eigen::MatrixXd::Zero(total + 1, agents);

  const auto record_errors = [&](long i) {
    double sum = 0.0;
    for (int k = 0; k < agents; ++k) {
      const double sq = (problem.truth.agent(k) - states[k].w).squaredNorm();
      sum += sq;
      if (options.record_agent_sq_err) trace.agent_sq_err(i, k) = sq;
    }
    trace.msd[i] = sum / agents;
  };
  record_errors(0);

  std::vector<double> bits(agents, 0.0);
  IterationDebug debug;
  IterationDebug* debug_ptr = options.level_dump ? &debug : nullptr;
  for (long i = 1; i <= total; ++i) {
    if (params.algorithm == Algorithm::Atc)
      atc_iteration(states, problem, params, data_rngs, bits);
    else
      def_atc_iteration(states, problem, params, data_rngs, compression_rngs,
                        bits, debug_ptr);
    check_finite_bounded(states, i);
    record_errors(i);
    double rate = 0.0;
    for (int k = 0; k < agents; ++k) {
      rate += bits[k] / topo.dims[k];
      if (options.record_agent_bits) trace.agent_bits(i - 1, k) = bits[k];
    }
    trace.rate[i] = rate / agents;
    if (options.level_dump && params.algorithm != Algorithm::Atc) {
      for (int k = 0; k < agents; ++k) {
        if (!debug.levels[k]) continue;
        *options.level_dump << i << ',' << k;
        for (long long n : *debug.levels[k]) *options.level_dump << ',' << n;
        *options.level_dump << '\n';
      }
    }
  }
  return trace;
}

}  // namespace defatc
