#include <doctest.h>

#include <cmath>

#include "defatc/diagnostics.hpp"

using namespace defatc;

TEST_SUITE_BEGIN("diagnostics");

namespace {

struct Consensus {
  NetworkTopology topo;
  SubspaceBasis basis;
  CombinationMatrix comb;
};

Consensus metropolis_consensus(int agents, int dim, std::uint64_t seed) {
  Consensus c;
  c.topo = random_geometric_topology(agents, dim, 0.4, seed);
  c.basis = consensus_basis(agents, dim);
  c.comb = build_combination_matrix(c.topo, c.basis);
  return c;
}

}  // namespace

TEST_CASE("zero relative noise with unit parameters satisfies condition 27") {
  const Consensus c = metropolis_consensus(10, 2, 3);
  const StabilityReport report =
      stability_check(c.comb, c.basis, c.topo, 1.0, 1.0, 0.0);
  CHECK(report.satisfied27);
  CHECK(std::isinf(report.rhs27));
  CHECK_FALSE(report.advisory);
}

TEST_CASE("symmetric mixing matrices have unit eigenvector norms") {
  const Consensus c = metropolis_consensus(12, 3, 5);
  const StabilityReport report =
      stability_check(c.comb, c.basis, c.topo, 0.9, 0.9, 0.6);
  CHECK(report.v1 * report.v2 >= 1.0);
  CHECK(report.v1 * report.v2 <= 1.0 + 1e-6);
  CHECK(report.rho_j ==
        doctest::Approx(report.rho_gap).epsilon(1e-8));
}

TEST_CASE("reports are reproducible") {
  const Consensus c = metropolis_consensus(8, 2, 7);
  const StabilityReport a =
      stability_check(c.comb, c.basis, c.topo, 0.9, 0.9, 0.6);
  const StabilityReport b =
      stability_check(c.comb, c.basis, c.topo, 0.9, 0.9, 0.6);
  CHECK(a.rho_gap == b.rho_gap);
  CHECK(a.v1 == b.v1);
  CHECK(a.v2 == b.v2);
  CHECK(a.lhs27 == b.lhs27);
  CHECK(a.lhs28 == b.lhs28);
  CHECK(a.satisfied27 == b.satisfied27);
  CHECK(a.satisfied28 == b.satisfied28);
}

TEST_CASE("the experiment configuration yields a report without assertions") {
  // Top-4-of-10 with a dithered inner: beta_c^2 = 0.6.
  const Consensus c = metropolis_consensus(30, 10, 7);
  const StabilityReport report =
      stability_check(c.comb, c.basis, c.topo, 0.9, 0.9, 0.6);
  CHECK(report.rho_gap < 1.0);
  CHECK(report.lhs27 == doctest::Approx(0.81).epsilon(1e-12));
  CHECK(std::isfinite(report.lhs28));
  CHECK_FALSE(report.advisory);
}

TEST_CASE("defective combination matrices are flagged advisory") {
  // A = [[1,0,0],[0,1/2,1],[0,0,1/2]] satisfies the subspace conditions
  // for U = e1 but carries a genuine Jordan block.
  NetworkTopology topo;
  topo.agents = 1;
  topo.dims = {3};
  topo.adjacency.resize(1, 1);
  topo.adjacency(0, 0) = true;
  SubspaceBasis basis;
  basis.structure = BasisStructure::Custom;
  basis.u = Eigen::MatrixXd::Zero(3, 1);
  basis.u(0, 0) = 1.0;
  CombinationMatrix comb;
  comb.a = Eigen::MatrixXd::Zero(3, 3);
  comb.a(0, 0) = 1.0;
  comb.a(1, 1) = 0.5;
  comb.a(1, 2) = 1.0;
  comb.a(2, 2) = 0.5;
  const StabilityReport report =
      stability_check(comb, basis, topo, 0.9, 0.9, 0.1);
  CHECK(report.advisory);
  CHECK(report.note.find("defective") != std::string::npos);
}

TEST_CASE("invalid combination matrices are rejected up front") {
  const Consensus c = metropolis_consensus(6, 2, 11);
  CombinationMatrix identity;
  identity.a = Eigen::MatrixXd::Identity(12, 12);
  CHECK_THROWS_AS(stability_check(identity, c.basis, c.topo, 0.9, 0.9, 0.1),
                  ConstructionError);
}

TEST_CASE("identity audits report exactly zero error") {
  Rng rng(13);
  std::vector<Eigen::VectorXd> inputs = {Eigen::VectorXd::Constant(5, 1.5)};
  const DistortionAudit audit =
      distortion_audit(identity_op(), 1000, inputs, rng);
  CHECK(audit.pass);
  CHECK(audit.cases[0].empirical_mse == 0.0);
}

TEST_CASE("dithered audit sits at the worst-case corner and still passes") {
  // x = 0.5 * ones with delta = 1 makes every component a fair coin:
  // the empirical MSE hovers at the bound L/4 and the 5-sigma slack
  // absorbs the fluctuation.
  Rng rng(17);
  const int len = 8;
  std::vector<Eigen::VectorXd> inputs = {Eigen::VectorXd::Constant(len, 0.5)};
  const DistortionAudit audit =
      distortion_audit(dithered_op(1.0), 10000, inputs, rng);
  CHECK(audit.pass);
  CHECK(audit.cases[0].empirical_mse ==
        doctest::Approx(len * 0.25).epsilon(0.05));
}

TEST_CASE("top-c sparsifier obeys its deterministic energy bound") {
  Rng rng(19);
  std::vector<Eigen::VectorXd> inputs;
  for (int i = 0; i < 5; ++i) {
    Eigen::VectorXd x(10);
    for (int j = 0; j < 10; ++j) x[j] = rng.gaussian();
    inputs.push_back(x);
  }
  const DistortionAudit audit =
      distortion_audit(top_c_op(4), 1000, inputs, rng);
  CHECK(audit.pass);
  for (const auto& c : audit.cases)
    CHECK(c.empirical_mse <= 0.6 * c.input_norm * c.input_norm + 1e-12);
}

TEST_CASE("unbiasedness audit accepts unbiased and rejects biased rules") {
  Rng rng(23);
  std::vector<Eigen::VectorXd> inputs;
  Eigen::VectorXd x(6);
  x << 0.3, -1.2, 0.7, 2.5, -0.1, 0.9;
  inputs.push_back(x);
  CHECK(unbiasedness_audit(dithered_op(0.5), 20000, inputs, rng).pass);
  CHECK(unbiasedness_audit(anq_op(0.5, 0.2), 20000, inputs, rng).pass);
  CHECK(unbiasedness_audit(qsgd_op(2), 20000, inputs, rng).pass);
  // The biased top-c sparsifier should fail decisively.
  CHECK_FALSE(unbiasedness_audit(top_c_op(2), 20000, inputs, rng).pass);
}

TEST_CASE("audits insist on a minimum trial count") {
  Rng rng(29);
  std::vector<Eigen::VectorXd> inputs = {Eigen::VectorXd::Zero(3)};
  CHECK_THROWS_AS(distortion_audit(identity_op(), 10, inputs, rng),
                  ConfigError);
}

TEST_SUITE_END();
