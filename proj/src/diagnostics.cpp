#include "defatc/diagnostics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "defatc/errors.hpp"

namespace defatc {

namespace {

struct EigenStructure {
  std::vector<std::complex<double>> tail;  // spectrum outside the subspace
  double v1 = 0.0;
  double v2 = 0.0;
  bool ill_conditioned = false;
};

// Assembles V = [U | eigenvectors of the non-unit spectrum] and measures
// |V| and |V^-1| through its singular values.
EigenStructure analyze(const Eigen::MatrixXd& a, const Eigen::MatrixXd& u) {
  const int m = static_cast<int>(a.rows());
  const int p = static_cast<int>(u.cols());
  EigenStructure out;

  const bool symmetric =
      (a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-12;
  Eigen::MatrixXcd v(m, m);
  v.leftCols(p) = u.cast<std::complex<double>>();

  if (symmetric) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    // Keep the m - p eigenvectors farthest from the unit eigenvalue.
    std::vector<int> order(m);
    for (int i = 0; i < m; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int i, int j) {
      return std::abs(solver.eigenvalues()[i] - 1.0) >
             std::abs(solver.eigenvalues()[j] - 1.0);
    });
    for (int i = 0; i < m - p; ++i) {
      out.tail.emplace_back(solver.eigenvalues()[order[i]], 0.0);
      v.col(p + i) =
          solver.eigenvectors().col(order[i]).cast<std::complex<double>>();
    }
  } else {
    Eigen::ComplexEigenSolver<Eigen::MatrixXd> solver(a, true);
    std::vector<int> order(m);
    for (int i = 0; i < m; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int i, int j) {
      return std::abs(solver.eigenvalues()[i] - 1.0) >
             std::abs(solver.eigenvalues()[j] - 1.0);
    });
    for (int i = 0; i < m - p; ++i) {
      out.tail.push_back(solver.eigenvalues()[order[i]]);
      v.col(p + i) = solver.eigenvectors().col(order[i]);
    }
  }

  Eigen::BDCSVD<Eigen::MatrixXcd> svd(v);
  const double sigma_max = svd.singularValues()(0);
  const double sigma_min = svd.singularValues()(svd.singularValues().size() - 1);
  out.v2 = sigma_max;
  if (sigma_min <= sigma_max * 1e-12) {
    out.ill_conditioned = true;
    out.v1 = std::numeric_limits<double>::infinity();
  } else {
    out.v1 = 1.0 / sigma_min;
  }
  return out;
}

}  // namespace

StabilityReport stability_check(const CombinationMatrix& comb,
                                const SubspaceBasis& basis,
                                const NetworkTopology& topo, double zeta,
                                double gamma, double beta_c_max_sq,
                                double epsilon) {
  validate_combination(comb, topo, basis);
  if (beta_c_max_sq < 0.0)
    throw ConfigError("beta_c_max_sq must be non-negative");

  StabilityReport report;
  report.epsilon = epsilon;
  report.zeta = zeta;
  report.gamma = gamma;
  report.beta_c_max_sq = beta_c_max_sq;
  report.rho_gap = spectral_radius_gap(comb.a, basis.u);

  const EigenStructure eig = analyze(comb.a, basis.u);
  report.rho_j = 0.0;
  report.rho_i_minus_j = 0.0;
  for (const auto& lambda : eig.tail) {
    report.rho_j = std::max(report.rho_j, std::abs(lambda));
    report.rho_i_minus_j =
        std::max(report.rho_i_minus_j, std::abs(1.0 - lambda));
  }
  report.v1 = eig.v1;
  report.v2 = eig.v2;
  if (eig.ill_conditioned) {
    report.advisory = true;
    report.note =
        "eigenvector matrix is numerically singular (defective or nearly "
        "defective A); the reported norms and conditions are unreliable";
  } else {
    report.note =
        "sufficient conditions evaluated in the numerical-diagonalization "
        "limit; they are conservative, not necessary";
  }

  const double rho_j_eps = report.rho_j + epsilon;
  const double rho_ij_eps = report.rho_i_minus_j + epsilon;
  const double v_sq = report.v1 * report.v1 * report.v2 * report.v2;

  report.lhs27 = gamma * zeta;
  if (beta_c_max_sq == 0.0) {
    report.rhs27 = std::numeric_limits<double>::infinity();
  } else if (rho_j_eps >= 1.0) {
    report.rhs27 = 0.0;
  } else {
    report.rhs27 = (1.0 - rho_j_eps) /
                   (4.0 * v_sq * beta_c_max_sq * rho_ij_eps * rho_ij_eps);
  }
  report.satisfied27 = report.lhs27 > 0.0 && report.lhs27 < report.rhs27;

  if (rho_j_eps >= 1.0) {
    report.lhs28 = std::numeric_limits<double>::infinity();
  } else {
    const double contraction_term =
        gamma * zeta * rho_ij_eps * rho_ij_eps / (1.0 - rho_j_eps);
    const double reach = (1.0 + gamma) - gamma * rho_j_eps;
    const double noise_term =
        zeta * zeta * beta_c_max_sq * v_sq * (1.0 + reach * reach);
    report.lhs28 = contraction_term + noise_term;
  }
  report.satisfied28 = report.lhs28 < 0.5;
  return report;
}

DistortionAudit distortion_audit(const OperatorSpec& spec, int trials,
                                 const std::vector<Eigen::VectorXd>& inputs,
                                 Rng& rng) {
  if (trials < 1000)
    throw ConfigError("distortion audit needs at least 1000 trials");
  DistortionAudit audit;
  audit.operator_name = operator_kind_name(spec.kind);
  audit.trials = trials;
  audit.pass = true;
  for (const auto& x : inputs) {
    const DistortionParams params =
        declared_params(spec, static_cast<int>(x.size()));
    double sum = 0.0, sum_sq = 0.0;
    for (int t = 0; t < trials; ++t) {
      const CompressedMessage msg = compress(spec, x, rng);
      const double err = (x - msg.values).squaredNorm();
      sum += err;
      sum_sq += err * err;
    }
    DistortionCase c;
    c.input_norm = x.norm();
    c.empirical_mse = sum / trials;
    const double variance =
        std::max(0.0, sum_sq / trials - c.empirical_mse * c.empirical_mse);
    c.std_err = std::sqrt(variance / trials);
    c.bound = params.beta_sq * x.squaredNorm() + params.sigma_sq;
    c.pass = c.empirical_mse <= c.bound + 5.0 * c.std_err;
    audit.pass = audit.pass && c.pass;
    audit.cases.push_back(c);
  }
  return audit;
}

UnbiasednessAudit unbiasedness_audit(const OperatorSpec& spec, int trials,
                                     const std::vector<Eigen::VectorXd>& inputs,
                                     Rng& rng) {
  if (trials < 1000)
    throw ConfigError("unbiasedness audit needs at least 1000 trials");
  UnbiasednessAudit audit;
  audit.operator_name = operator_kind_name(spec.kind);
  audit.trials = trials;
  audit.pass = true;
  for (const auto& x : inputs) {
    const int len = static_cast<int>(x.size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(len);
    Eigen::VectorXd mean_sq = Eigen::VectorXd::Zero(len);
    for (int t = 0; t < trials; ++t) {
      const Eigen::VectorXd err = compress(spec, x, rng).values - x;
      mean += err;
      mean_sq += err.cwiseProduct(err);
    }
    mean /= trials;
    mean_sq /= trials;
    for (int j = 0; j < len; ++j) {
      const double variance = std::max(0.0, mean_sq[j] - mean[j] * mean[j]);
      const double allowance = 5.0 * std::sqrt(variance / trials);
      // A zero-variance component must hit the mean exactly.
      const double ratio = allowance > 0.0
                               ? std::abs(mean[j]) / allowance
                               : (mean[j] == 0.0 ? 0.0 : HUGE_VAL);
      audit.worst_ratio = std::max(audit.worst_ratio, ratio);
    }
  }
  audit.pass = audit.worst_ratio <= 1.0;
  return audit;
}

}  // namespace defatc
