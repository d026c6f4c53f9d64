#include <doctest.h>

#include "defatc/topology.hpp"

using namespace defatc;

TEST_SUITE_BEGIN("topology");

TEST_CASE("metropolis weights on the path graph 1-2-3") {
  // Neighborhood sizes (self included) are 2, 3, 2, so the shared edges
  // weigh 1/3 and the end nodes keep 2/3 on the diagonal.
  const NetworkTopology topo = topology_from_links(3, 1, {{0, 1}, {1, 2}});
  const Eigen::MatrixXd a = metropolis_matrix(topo);
  CHECK(a(0, 1) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(a(1, 2) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(a(0, 0) == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(a(2, 2) == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(a(1, 1) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(a(0, 2) == 0.0);
}

TEST_CASE("metropolis of a single node is [1]") {
  const Eigen::MatrixXd a = metropolis_matrix(complete_topology(1, 3));
  REQUIRE(a.rows() == 1);
  CHECK(a(0, 0) == 1.0);
}

TEST_CASE("metropolis on the complete 3-graph is uniform with zero gap") {
  const NetworkTopology topo = complete_topology(3, 1);
  const Eigen::MatrixXd a = metropolis_matrix(topo);
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l)
      CHECK(a(k, l) == doctest::Approx(1.0 / 3).epsilon(1e-14));
  const SubspaceBasis basis = consensus_basis(3, 1);
  CHECK(spectral_radius_gap(a, basis.u) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("metropolis output is symmetric and doubly stochastic") {
  for (std::uint64_t seed : {3u, 17u, 91u}) {
    const NetworkTopology topo = random_geometric_topology(30, 1, 0.35, seed);
    const Eigen::MatrixXd a = metropolis_matrix(topo);
    CHECK((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (int k = 0; k < 30; ++k) {
      CHECK(a.row(k).sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(a.col(k).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(a.minCoeff() >= 0.0);
  }
}

TEST_CASE("disconnected graph is rejected") {
  CHECK_THROWS_AS(topology_from_links(4, 1, {{0, 1}, {2, 3}}), TopologyError);
}

TEST_CASE("adjacency must be well formed") {
  NetworkTopology topo;
  topo.agents = 2;
  topo.dims = {1, 1};
  topo.adjacency.resize(2, 2);
  topo.adjacency << true, true, true, false;  // missing self-loop
  CHECK_THROWS_AS(validate_topology(topo), TopologyError);
}

TEST_CASE("consensus basis K=4, M_c=1") {
  const SubspaceBasis basis = consensus_basis(4, 1);
  REQUIRE(basis.u.rows() == 4);
  REQUIRE(basis.u.cols() == 1);
  for (int k = 0; k < 4; ++k) CHECK(basis.u(k, 0) == doctest::Approx(0.5));
}

TEST_CASE("consensus basis K=1 is the identity") {
  const SubspaceBasis basis = consensus_basis(1, 3);
  CHECK((basis.u - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("consensus basis K=30, M_c=10 is semi-unitary") {
  const SubspaceBasis basis = consensus_basis(30, 10);
  REQUIRE(basis.u.rows() == 300);
  REQUIRE(basis.u.cols() == 10);
  validate_basis(basis.u);
}

namespace {

std::vector<int> range(int from, int to) {
  std::vector<int> out;
  for (int i = from; i <= to; ++i) out.push_back(i);
  return out;
}

// The partial-consensus layout: coords 0-4 global, 5-7 split into two
// halves, 8-9 split into three groups of ten.
std::vector<ConsensusGroup> partial_consensus_groups() {
  return {
      {range(0, 29), range(0, 4)},
      {range(0, 14), range(5, 7)},
      {range(15, 29), range(5, 7)},
      {range(0, 9), range(8, 9)},
      {range(10, 19), range(8, 9)},
      {range(20, 29), range(8, 9)},
  };
}

}  // namespace

TEST_CASE("group basis with one all-agent group equals the consensus basis") {
  const NetworkTopology topo = complete_topology(5, 3);
  const SubspaceBasis grouped =
      group_consensus_basis(topo, {{range(0, 4), range(0, 2)}});
  const SubspaceBasis consensus = consensus_basis(5, 3);
  CHECK((grouped.u - consensus.u).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("partial-consensus grouping spans 17 columns") {
  const NetworkTopology topo = complete_topology(30, 10);
  const SubspaceBasis basis =
      group_consensus_basis(topo, partial_consensus_groups());
  CHECK(basis.subspace_dim() == 17);
  validate_basis(basis.u);
}

TEST_CASE("two agents sharing coordinate 0 with private coordinate 1") {
  const NetworkTopology topo = complete_topology(2, 2);
  const SubspaceBasis basis = group_consensus_basis(
      topo, {{{0, 1}, {0}}, {{0}, {1}}, {{1}, {1}}});
  CHECK(basis.subspace_dim() == 3);
}

TEST_CASE("group basis columns are orthonormal with disjoint supports") {
  const NetworkTopology topo = complete_topology(30, 10);
  const SubspaceBasis basis =
      group_consensus_basis(topo, partial_consensus_groups());
  const int p = basis.subspace_dim();
  for (int i = 0; i < p; ++i) {
    CHECK(std::abs(basis.u.col(i).norm() - 1.0) <= 1e-12);
    for (int j = i + 1; j < p; ++j)
      CHECK(basis.u.col(i).dot(basis.u.col(j)) == 0.0);
  }
}

TEST_CASE("overlapping or non-covering groups are rejected") {
  const NetworkTopology topo = complete_topology(4, 2);
  // Coordinate 1 is covered by nobody.
  CHECK_THROWS_AS(group_consensus_basis(topo, {{range(0, 3), {0}}}),
                  ConfigError);
  // Agent 1 is covered twice on coordinate 0.
  CHECK_THROWS_AS(group_consensus_basis(topo, {{range(0, 3), range(0, 1)},
                                               {{1}, {0}}}),
                  ConfigError);
}

TEST_CASE("consensus combination matrix, complete 3-graph, M_c=2") {
  const NetworkTopology topo = complete_topology(3, 2);
  const SubspaceBasis basis = consensus_basis(3, 2);
  const CombinationMatrix comb = build_combination_matrix(topo, basis);
  CHECK(spectral_radius_gap(comb.a, basis.u) ==
        doctest::Approx(0.0).epsilon(1e-12));
  validate_combination(comb, topo, basis);
}

TEST_CASE("Metropolis consensus matrix on K=30 passes the subspace checks") {
  const NetworkTopology topo = random_geometric_topology(30, 10, 0.35, 7);
  const SubspaceBasis basis = consensus_basis(30, 10);
  const CombinationMatrix comb = build_combination_matrix(topo, basis);
  validate_combination(comb, topo, basis, 1e-10);
}

TEST_CASE("group-blocks combination matrix passes the subspace checks") {
  const NetworkTopology topo = complete_topology(30, 10);
  const SubspaceBasis basis =
      group_consensus_basis(topo, partial_consensus_groups());
  const CombinationMatrix comb = build_combination_matrix(topo, basis);
  validate_combination(comb, topo, basis, 1e-10);
}

TEST_CASE("spectral radius gap of the projector itself is zero") {
  const SubspaceBasis basis = consensus_basis(4, 2);
  const Eigen::MatrixXd p_u = basis.u * basis.u.transpose();
  CHECK(spectral_radius_gap(p_u, basis.u) ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("identity mixing has gap 1 and the validator flags it") {
  const NetworkTopology topo = complete_topology(4, 2);
  const SubspaceBasis basis = consensus_basis(4, 2);
  CombinationMatrix comb;
  comb.a = Eigen::MatrixXd::Identity(8, 8);
  CHECK(spectral_radius_gap(comb.a, basis.u) == doctest::Approx(1.0));
  CHECK_THROWS_AS(validate_combination(comb, topo, basis), ConstructionError);
}

TEST_CASE("positive diagonals keep bipartite-regular graphs contractive") {
  // A lazy-free rule would be periodic on even rings; the self-weight
  // makes the gap strict here.
  for (int agents : {2, 4, 6}) {
    const NetworkTopology topo =
        agents == 2 ? complete_topology(2, 1) : ring_topology(agents, 1);
    const SubspaceBasis basis = consensus_basis(agents, 1);
    const CombinationMatrix comb = build_combination_matrix(topo, basis);
    CHECK(spectral_radius_gap(comb.a, basis.u) < 1.0 - 1e-8);
  }
}

TEST_CASE("single-agent network degenerates cleanly") {
  const NetworkTopology topo = complete_topology(1, 4);
  const SubspaceBasis basis = consensus_basis(1, 4);
  const CombinationMatrix comb = build_combination_matrix(topo, basis);
  CHECK((comb.a - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_SUITE_END();
