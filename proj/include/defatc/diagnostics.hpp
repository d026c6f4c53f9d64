#pragma once

#include <string>
#include <vector>

#include "defatc/compression.hpp"
#include "defatc/topology.hpp"

namespace defatc {

/// Numerical evaluation of the sufficient stability conditions on the
/// damping/mixing parameters. Advisory by nature: the epsilon-Jordan
/// construction behind the conditions is approximated by a numerical
/// diagonalization, which is exact only when A is diagonalizable.
struct StabilityReport {
  double rho_gap = 0.0;  // rho(A - P_U)
  double rho_j = 0.0;    // spectral radius of the second-stage block
  double rho_i_minus_j = 0.0;
  double v1 = 0.0;  // norm of the inverse eigenvector matrix
  double v2 = 0.0;  // norm of the eigenvector matrix
  double epsilon = 0.0;
  double zeta = 0.0;
  double gamma = 0.0;
  double beta_c_max_sq = 0.0;

  double lhs27 = 0.0;  // gamma * zeta
  double rhs27 = 0.0;  // may be +inf when beta_c_max_sq = 0
  double lhs28 = 0.0;  // compared against 1/2
  bool satisfied27 = false;
  bool satisfied28 = false;

  bool advisory = false;  // diagonalization was ill-conditioned
  std::string note;
};

/// Evaluates both parameter conditions from the eigendecomposition of A,
/// with the Jordan perturbation set to the small configured epsilon.
/// Validates the subspace conditions on A first. A defective (or badly
/// conditioned) eigenvector matrix yields advisory = true with a warning
/// note rather than a failure.
StabilityReport stability_check(const CombinationMatrix& comb,
                                const SubspaceBasis& basis,
                                const NetworkTopology& topo, double zeta,
                                double gamma, double beta_c_max_sq,
                                double epsilon = 1e-3);

/// Empirical check of the declared distortion bound on one input.
struct DistortionCase {
  double input_norm = 0.0;
  double empirical_mse = 0.0;
  double bound = 0.0;      // beta^2 |x|^2 + sigma^2
  double std_err = 0.0;    // standard error of the MSE estimate
  bool pass = false;       // empirical <= bound + 5 std errors
};

struct DistortionAudit {
  std::string operator_name;
  int trials = 0;
  std::vector<DistortionCase> cases;
  bool pass = false;
};

/// Monte Carlo estimate of E|x - C(x)|^2 for each input vector, compared
/// against the declared bound with a 5-standard-error slack. Requires at
/// least 1000 trials.
DistortionAudit distortion_audit(const OperatorSpec& spec, int trials,
                                 const std::vector<Eigen::VectorXd>& inputs,
                                 Rng& rng);

/// Componentwise mean-error test for operators declared unbiased:
/// |mean error_j| <= 5 * sample_std_j / sqrt(trials) for every component.
struct UnbiasednessAudit {
  std::string operator_name;
  int trials = 0;
  double worst_ratio = 0.0;  // max_j |mean_j| / (5 std_j / sqrt(N))
  bool pass = false;
};

UnbiasednessAudit unbiasedness_audit(const OperatorSpec& spec, int trials,
                                     const std::vector<Eigen::VectorXd>& inputs,
                                     Rng& rng);

}  // namespace defatc
