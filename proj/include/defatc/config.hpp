#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "defatc/engine.hpp"

namespace defatc {

/// Fully parsed experiment description. Loading validates every
/// module-level precondition checkable before construction and reports
/// all violations at once, each with its field path.
struct ExperimentConfig {
  // topology
  std::string topology_type;  // complete | ring | random-geometric | explicit
  int agents = 0;
  double radius = 0.0;                          // random-geometric
  std::vector<std::pair<int, int>> links;       // explicit

  // basis
  std::string basis_type;  // consensus | groups | custom
  int dim = 0;             // per-agent parameter length
  std::vector<ConsensusGroup> groups;
  std::string u_file;  // custom basis (CSV matrix)
  std::string a_file;  // custom combination matrix (CSV matrix)

  // model
  bool reg_var_uniform = false;
  std::pair<double, double> reg_var_interval{0.0, 0.0};
  std::vector<double> reg_var_values;  // explicit per agent (or single)
  bool noise_var_uniform = false;
  std::pair<double, double> noise_var_interval{0.0, 0.0};
  std::vector<double> noise_var_values;
  std::string w_star_mode;  // consensus-unit-norm | group-perturbed | explicit
  double perturbation_variance = 0.0;
  std::vector<Eigen::VectorXd> w_star_values;

  // algorithm
  Algorithm algorithm = Algorithm::DefAtc;
  OperatorSpec op;
  std::vector<double> mu_list;
  double zeta = 1.0;
  double gamma = 1.0;

  // execution
  long iterations = 0;  // 0 = use the default rule
  int monte_carlo_runs = 1;
  std::uint64_t seed = 1;
  int steady_state_window = 100;
  int thinning = 1;
  int jobs = 0;  // 0 = hardware concurrency
  std::string output_dir = "out";

  // rate-distortion sweep
  std::vector<double> epsilon_grid;
  std::vector<double> zeta_grid;
  std::vector<double> gamma_grid;

  nlohmann::json raw;  // original document, for metadata and hashing
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const nlohmann::json& doc);

/// Content hash of the canonicalized config document.
std::string config_hash(const ExperimentConfig& config);

/// Constructed problem plus the concrete values drawn while building it
/// (variance arrays, derived seeds): everything a reader needs to
/// reproduce the run.
struct BuiltExperiment {
  Problem problem;
  nlohmann::json build_info;
};

BuiltExperiment build_experiment(const ExperimentConfig& config);

/// Iteration count for one step-size: the configured value, or the
/// default rule when the config leaves it at zero.
long iterations_for(const ExperimentConfig& config,
                    const LinearRegressionModel& model, double mu);

RunParams run_params_for(const ExperimentConfig& config, double mu);

}  // namespace defatc
