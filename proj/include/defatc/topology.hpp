#pragma once

#include <Eigen/Dense>
#include <vector>

#include "defatc/errors.hpp"

namespace defatc {

/// Undirected communication graph. Every node belongs to its own
/// neighborhood, so the adjacency diagonal is always true.
struct NetworkTopology {
  int agents = 0;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> adjacency;
  std::vector<int> dims;  // per-agent parameter length M_k

  int total_dim() const;
  int offset(int k) const;  // start of agent k's slice in a stacked vector
  std::vector<int> neighbors(int k) const;  // includes k itself
  int degree(int k) const;                  // neighbor count excluding self
};

/// Validates symmetry, self-loops, and connectivity; throws TopologyError.
void validate_topology(const NetworkTopology& topo);

bool is_connected(
    const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& adjacency);

/// Connectivity of the subgraph induced by a subset of agents.
bool induced_subgraph_connected(const NetworkTopology& topo,
                                const std::vector<int>& agents);

// Generators. All produce validated topologies with uniform dims.
NetworkTopology complete_topology(int agents, int dim);
NetworkTopology ring_topology(int agents, int dim);
/// K points uniform in the unit square, linked when closer than `radius`.
/// Retries internally (bumping the seed) until the graph is connected.
NetworkTopology random_geometric_topology(int agents, int dim, double radius,
                                          std::uint64_t seed);
NetworkTopology topology_from_links(
    int agents, int dim, const std::vector<std::pair<int, int>>& links);

/// One (agent group, coordinate set) constraint: the listed agents share
/// the listed coordinates of their parameter vectors.
struct ConsensusGroup {
  std::vector<int> agents;
  std::vector<int> coords;
};

enum class BasisStructure { Consensus, GroupBlocks, Custom };

/// Semi-unitary basis of the constraint subspace.
struct SubspaceBasis {
  Eigen::MatrixXd u;  // M x P, orthonormal columns
  BasisStructure structure = BasisStructure::Custom;
  std::vector<ConsensusGroup> groups;  // populated for GroupBlocks

  int ambient_dim() const { return static_cast<int>(u.rows()); }
  int subspace_dim() const { return static_cast<int>(u.cols()); }
};

/// Throws if the matrix is not semi-unitary / full column rank.
void validate_basis(const Eigen::MatrixXd& u, double tol = 1e-10);

/// U = (1/sqrt(K)) (1_K (x) I_Mc): global consensus over identical slices.
SubspaceBasis consensus_basis(int agents, int dim);

/// Columns are normalized indicators of (group, coordinate) pairs.
/// Preconditions: for each coordinate the covering groups partition the
/// agent set, and each group's induced subgraph is connected.
SubspaceBasis group_consensus_basis(const NetworkTopology& topo,
                                    const std::vector<ConsensusGroup>& groups);

/// Block matrix mixing neighbor estimates. Satisfies A U = U,
/// U^T A = U^T, and rho(A - U U^T) < 1.
struct CombinationMatrix {
  Eigen::MatrixXd a;  // M x M, block sparsity matches adjacency
};

/// Metropolis weights on the plain graph: a_kl = 1/max(n_k, n_l) for
/// neighbors l != k, where n_k is the neighborhood size including k
/// itself; the diagonal absorbs the remainder. Symmetric and doubly
/// stochastic, with strictly positive diagonal.
Eigen::MatrixXd metropolis_matrix(const NetworkTopology& topo);

/// Assembles A for consensus (Metropolis (x) identity) or group-blocks
/// structure (per-coordinate Metropolis of each group's induced subgraph).
/// The result is re-validated; a spectral-gap violation raises
/// ConstructionError (unreachable for connected groups, kept as a guard).
CombinationMatrix build_combination_matrix(const NetworkTopology& topo,
                                           const SubspaceBasis& basis);

/// rho(A - U U^T) from the full (possibly complex) spectrum.
double spectral_radius_gap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& u);

/// Checks the three subspace conditions plus block sparsity.
/// Throws ConstructionError describing every violated condition.
void validate_combination(const CombinationMatrix& comb,
                          const NetworkTopology& topo,
                          const SubspaceBasis& basis, double tol = 1e-10);

}  // namespace defatc
