#pragma once

#include <Eigen/Dense>
#include <vector>

#include "defatc/rng.hpp"
#include "defatc/topology.hpp"

namespace defatc {

/// Streaming linear-Gaussian data: d_k(i) = u_{k,i}^T w*_k + v_k(i) with
/// u ~ N(0, sigma_u^2 I) and v ~ N(0, sigma_v^2). The associated quadratic
/// risk is J_k(w) = E |d - u^T w|^2.
struct LinearRegressionModel {
  std::vector<Eigen::VectorXd> w_star;  // per-agent true models
  std::vector<double> sigma_u_sq;       // regressor variances
  std::vector<double> sigma_v_sq;       // noise variances

  int agents() const { return static_cast<int>(w_star.size()); }
  int dim(int k) const { return static_cast<int>(w_star[k].size()); }
};

void validate_model(const LinearRegressionModel& model,
                    const NetworkTopology& topo);

struct Sample {
  Eigen::VectorXd u;
  double d = 0.0;
};

Sample sample(const LinearRegressionModel& model, int k, Rng& rng);

/// Instantaneous gradient of |d - u^T w|^2: 2 u (u^T w - d). Its
/// conditional mean is the true gradient 2 sigma_u^2 (w - w*).
Eigen::VectorXd stochastic_gradient(const Eigen::VectorXd& w,
                                    const Eigen::VectorXd& u, double d);

/// True (deterministic) gradient of the quadratic risk at agent k.
Eigen::VectorXd true_gradient(const LinearRegressionModel& model, int k,
                              const Eigen::VectorXd& w);

/// Minimizer of the stacked quadratic risks restricted to Range(U).
struct GroundTruth {
  Eigen::VectorXd w_o;        // stacked length-M optimum
  std::vector<int> offsets;   // slice starts per agent
  std::vector<int> dims;

  Eigen::VectorXd agent(int k) const {
    return w_o.segment(offsets[k], dims[k]);
  }
};

/// Closed form for quadratic risks: W_o = U (U^T D U)^{-1} U^T D W*,
/// with D = diag(sigma_u^2 I). Checks the optimality residual
/// U^T grad J(W_o) and membership in Range(U) before returning.
GroundTruth constrained_optimum(const LinearRegressionModel& model,
                                const SubspaceBasis& basis,
                                const NetworkTopology& topo);

/// Per-agent true models for the partial-consensus setup: shared
/// components drawn once per (group, coordinate), then an i.i.d. Gaussian
/// perturbation of the given variance added per agent.
std::vector<Eigen::VectorXd> perturbed_group_models(
    const NetworkTopology& topo, const std::vector<ConsensusGroup>& groups,
    double perturbation_variance, Rng& rng);

}  // namespace defatc
