#include "defatc/model.hpp"

#include <cmath>

#include "defatc/errors.hpp"

namespace defatc {

void validate_model(const LinearRegressionModel& model,
                    const NetworkTopology& topo) {
  std::vector<std::string> issues;
  if (model.agents() != topo.agents)
    issues.push_back("model agent count does not match topology");
  if (static_cast<int>(model.sigma_u_sq.size()) != model.agents() ||
      static_cast<int>(model.sigma_v_sq.size()) != model.agents())
    issues.push_back("variance arrays do not match agent count");
  for (int k = 0; k < model.agents(); ++k) {
    if (k < topo.agents && model.dim(k) != topo.dims[k])
      issues.push_back("w_star dimension mismatch at agent " +
                       std::to_string(k));
    if (k < static_cast<int>(model.sigma_u_sq.size()) &&
        model.sigma_u_sq[k] <= 0.0)
      issues.push_back("regressor variance must be positive at agent " +
                       std::to_string(k));
    if (k < static_cast<int>(model.sigma_v_sq.size()) &&
        model.sigma_v_sq[k] < 0.0)
      issues.push_back("noise variance must be non-negative at agent " +
                       std::to_string(k));
  }
  if (!issues.empty()) throw ConfigError(issues);
}

Sample sample(const LinearRegressionModel& model, int k, Rng& rng) {
  const int dim = model.dim(k);
  Sample s;
  s.u.resize(dim);
  const double sd_u = std::sqrt(model.sigma_u_sq[k]);
  for (int j = 0; j < dim; ++j) s.u[j] = sd_u * rng.gaussian();
  const double v = std::sqrt(model.sigma_v_sq[k]) * rng.gaussian();
  s.d = s.u.dot(model.w_star[k]) + v;
  return s;
}

Eigen::VectorXd stochastic_gradient(const Eigen::VectorXd& w,
                                    const Eigen::VectorXd& u, double d) {
  return 2.0 * (u.dot(w) - d) * u;
}

Eigen::VectorXd true_gradient(const LinearRegressionModel& model, int k,
                              const Eigen::VectorXd& w) {
  return 2.0 * model.sigma_u_sq[k] * (w - model.w_star[k]);
}

GroundTruth constrained_optimum(const LinearRegressionModel& model,
                                const SubspaceBasis& basis,
                                const NetworkTopology& topo) {
  validate_model(model, topo);
  const int m_total = topo.total_dim();
  Eigen::VectorXd d_diag(m_total);
  Eigen::VectorXd w_star_stacked(m_total);
  for (int k = 0; k < topo.agents; ++k) {
    d_diag.segment(topo.offset(k), topo.dims[k])
        .setConstant(model.sigma_u_sq[k]);
    w_star_stacked.segment(topo.offset(k), topo.dims[k]) = model.w_star[k];
  }

  const Eigen::MatrixXd weighted_u = d_diag.asDiagonal() * basis.u;
  const Eigen::MatrixXd normal = basis.u.transpose() * weighted_u;
  const Eigen::VectorXd rhs = weighted_u.transpose() * w_star_stacked;
  const Eigen::VectorXd coeffs = normal.ldlt().solve(rhs);

  GroundTruth truth;
  truth.w_o = basis.u * coeffs;
  truth.offsets.resize(topo.agents);
  truth.dims = topo.dims;
  for (int k = 0; k < topo.agents; ++k) truth.offsets[k] = topo.offset(k);

  // Sanity: the result lies in Range(U) and zeroes the projected gradient.
  const double range_dev =
      (truth.w_o - basis.u * (basis.u.transpose() * truth.w_o))
          .cwiseAbs()
          .maxCoeff();
  if (range_dev > 1e-10)
    throw ConstructionError("constrained optimum left Range(U), deviation " +
                            std::to_string(range_dev));
  Eigen::VectorXd grad(m_total);
  for (int k = 0; k < topo.agents; ++k)
    grad.segment(topo.offset(k), topo.dims[k]) =
        true_gradient(model, k, truth.agent(k));
  const double opt_dev = (basis.u.transpose() * grad).cwiseAbs().maxCoeff();
  if (opt_dev > 1e-8)
    throw ConstructionError(
        "constrained optimum violates first-order optimality, residual " +
        std::to_string(opt_dev));
  return truth;
}

std::vector<Eigen::VectorXd> perturbed_group_models(
    const NetworkTopology& topo, const std::vector<ConsensusGroup>& groups,
    double perturbation_variance, Rng& rng) {
  const int dim = topo.dims[0];
  std::vector<Eigen::VectorXd> models(topo.agents,
                                      Eigen::VectorXd::Zero(dim));
  // One shared N(0,1) value per (group, coordinate) pair.
  for (const auto& g : groups) {
    for (int j : g.coords) {
      const double shared = rng.gaussian();
      for (int k : g.agents) models[k][j] = shared;
    }
  }
  const double sd = std::sqrt(perturbation_variance);
  for (int k = 0; k < topo.agents; ++k)
    for (int j = 0; j < dim; ++j) models[k][j] += sd * rng.gaussian();
  return models;
}

}  // namespace defatc
