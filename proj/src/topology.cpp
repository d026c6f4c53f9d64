#include "defatc/topology.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <numeric>
#include <queue>
#include <set>

#include "defatc/rng.hpp"

namespace defatc {

int NetworkTopology::total_dim() const {
  return std::accumulate(dims.begin(), dims.end(), 0);
}

int NetworkTopology::offset(int k) const {
  return std::accumulate(dims.begin(), dims.begin() + k, 0);
}

std::vector<int> NetworkTopology::neighbors(int k) const {
  std::vector<int> out;
  for (int l = 0; l < agents; ++l)
    if (adjacency(k, l)) out.push_back(l);
  return out;
}

int NetworkTopology::degree(int k) const {
  int d = 0;
  for (int l = 0; l < agents; ++l)
    if (l != k && adjacency(k, l)) ++d;
  return d;
}

bool is_connected(
    const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& adjacency) {
  const int n = static_cast<int>(adjacency.rows());
  if (n == 0) return false;
  std::vector<bool> seen(n, false);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  int count = 1;
  while (!frontier.empty()) {
    const int k = frontier.front();
    frontier.pop();
    for (int l = 0; l < n; ++l) {
      if (adjacency(k, l) && !seen[l]) {
        seen[l] = true;
        ++count;
        frontier.push(l);
      }
    }
  }
  return count == n;
}

void validate_topology(const NetworkTopology& topo) {
  if (topo.agents < 1) throw TopologyError("topology needs at least one agent");
  if (topo.adjacency.rows() != topo.agents ||
      topo.adjacency.cols() != topo.agents)
    throw TopologyError("adjacency size does not match agent count");
  if (static_cast<int>(topo.dims.size()) != topo.agents)
    throw TopologyError("dims size does not match agent count");
  for (int d : topo.dims)
    if (d < 1) throw TopologyError("per-agent dimension must be positive");
  for (int k = 0; k < topo.agents; ++k) {
    if (!topo.adjacency(k, k))
      throw TopologyError("adjacency diagonal must be true (node " +
                          std::to_string(k) + ")");
    for (int l = 0; l < topo.agents; ++l)
      if (topo.adjacency(k, l) != topo.adjacency(l, k))
        throw TopologyError("adjacency must be symmetric");
  }
  if (!is_connected(topo.adjacency))
    throw TopologyError("graph is not connected");
}

bool induced_subgraph_connected(const NetworkTopology& topo,
                                const std::vector<int>& agents) {
  if (agents.empty()) return false;
  std::set<int> members(agents.begin(), agents.end());
  std::set<int> seen;
  std::queue<int> frontier;
  frontier.push(agents[0]);
  seen.insert(agents[0]);
  while (!frontier.empty()) {
    const int k = frontier.front();
    frontier.pop();
    for (int l : members) {
      if (!seen.count(l) && topo.adjacency(k, l)) {
        seen.insert(l);
        frontier.push(l);
      }
    }
  }
  return seen.size() == members.size();
}

namespace {

NetworkTopology make_topology(
    int agents, int dim,
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> adjacency) {
  NetworkTopology topo;
  topo.agents = agents;
  topo.adjacency = std::move(adjacency);
  topo.dims.assign(agents, dim);
  validate_topology(topo);
  return topo;
}

}  // namespace

NetworkTopology complete_topology(int agents, int dim) {
  return make_topology(
      agents, dim,
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(
          agents, agents, true));
}

NetworkTopology ring_topology(int agents, int dim) {
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> adj =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(
          agents, agents, false);
  for (int k = 0; k < agents; ++k) {
    adj(k, k) = true;
    adj(k, (k + 1) % agents) = true;
    adj((k + 1) % agents, k) = true;
  }
  return make_topology(agents, dim, adj);
}

NetworkTopology random_geometric_topology(int agents, int dim, double radius,
                                          std::uint64_t seed) {
  if (radius <= 0.0) throw TopologyError("geometric radius must be positive");
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Rng rng(derive_seed(seed, {0x70706f6cULL, static_cast<std::uint64_t>(attempt)}));
    std::vector<double> x(agents), y(agents);
    for (int k = 0; k < agents; ++k) {
      x[k] = rng.uniform();
      y[k] = rng.uniform();
    }
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> adj =
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(
            agents, agents, false);
    for (int k = 0; k < agents; ++k) {
      adj(k, k) = true;
      for (int l = k + 1; l < agents; ++l) {
        const double dx = x[k] - x[l], dy = y[k] - y[l];
        if (dx * dx + dy * dy <= radius * radius) {
          adj(k, l) = true;
          adj(l, k) = true;
        }
      }
    }
    if (is_connected(adj)) return make_topology(agents, dim, adj);
  }
  throw TopologyError(
      "random geometric graph stayed disconnected after 1000 attempts; "
      "increase the radius");
}

NetworkTopology topology_from_links(
    int agents, int dim, const std::vector<std::pair<int, int>>& links) {
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> adj =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(
          agents, agents, false);
  for (int k = 0; k < agents; ++k) adj(k, k) = true;
  for (const auto& [a, b] : links) {
    if (a < 0 || a >= agents || b < 0 || b >= agents)
      throw TopologyError("link (" + std::to_string(a) + "," +
                          std::to_string(b) + ") out of range");
    adj(a, b) = true;
    adj(b, a) = true;
  }
  return make_topology(agents, dim, adj);
}

Eigen::MatrixXd metropolis_matrix(const NetworkTopology& topo) {
  validate_topology(topo);
  const int n = topo.agents;
  // Neighborhood sizes count the node itself, which keeps every diagonal
  // entry strictly positive: the chain is primitive on any connected
  // graph, so the mixing always contracts outside the consensus space.
  std::vector<int> size(n);
  for (int k = 0; k < n; ++k) size[k] = topo.degree(k) + 1;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    double off_sum = 0.0;
    for (int l = 0; l < n; ++l) {
      if (l == k || !topo.adjacency(k, l)) continue;
      a(k, l) = 1.0 / std::max(size[k], size[l]);
      off_sum += a(k, l);
    }
    a(k, k) = 1.0 - off_sum;
  }
  return a;
}

void validate_basis(const Eigen::MatrixXd& u, double tol) {
  if (u.rows() < u.cols())
    throw ConstructionError("basis has more columns than rows");
  const Eigen::MatrixXd gram = u.transpose() * u;
  const double dev =
      (gram - Eigen::MatrixXd::Identity(u.cols(), u.cols()))
          .cwiseAbs()
          .maxCoeff();
  if (dev > tol)
    throw ConstructionError("basis is not semi-unitary (max deviation " +
                            std::to_string(dev) + ")");
  // Semi-unitarity already implies full column rank.
}

SubspaceBasis consensus_basis(int agents, int dim) {
  if (agents < 1 || dim < 1)
    throw ConstructionError("consensus basis needs agents >= 1 and dim >= 1");
  SubspaceBasis basis;
  basis.structure = BasisStructure::Consensus;
  basis.u = Eigen::MatrixXd::Zero(agents * dim, dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(agents));
  for (int k = 0; k < agents; ++k)
    for (int j = 0; j < dim; ++j) basis.u(k * dim + j, j) = scale;
  return basis;
}

SubspaceBasis group_consensus_basis(const NetworkTopology& topo,
                                    const std::vector<ConsensusGroup>& groups) {
  validate_topology(topo);
  const int dim = topo.dims[0];
  for (int d : topo.dims)
    if (d != dim)
      throw ConfigError("group-consensus basis requires uniform agent dims");

  // Per coordinate, the covering groups must partition the agent set.
  for (int j = 0; j < dim; ++j) {
    std::vector<int> cover(topo.agents, 0);
    for (const auto& g : groups) {
      if (std::find(g.coords.begin(), g.coords.end(), j) == g.coords.end())
        continue;
      for (int k : g.agents) {
        if (k < 0 || k >= topo.agents)
          throw ConfigError("group agent index " + std::to_string(k) +
                            " out of range");
        ++cover[k];
      }
    }
    for (int k = 0; k < topo.agents; ++k) {
      if (cover[k] == 0)
        throw ConfigError("coordinate " + std::to_string(j) +
                          ": agent " + std::to_string(k) +
                          " is covered by no group");
      if (cover[k] > 1)
        throw ConfigError("coordinate " + std::to_string(j) +
                          ": agent " + std::to_string(k) +
                          " is covered by overlapping groups");
    }
  }
  for (const auto& g : groups)
    if (!induced_subgraph_connected(topo, g.agents))
      throw ConfigError("a group's induced subgraph is not connected");

  int columns = 0;
  for (const auto& g : groups) columns += static_cast<int>(g.coords.size());

  SubspaceBasis basis;
  basis.structure = BasisStructure::GroupBlocks;
  basis.groups = groups;
  basis.u = Eigen::MatrixXd::Zero(topo.agents * dim, columns);
  int col = 0;
  for (const auto& g : groups) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(g.agents.size()));
    for (int j : g.coords) {
      for (int k : g.agents) basis.u(k * dim + j, col) = scale;
      ++col;
    }
  }
  return basis;
}

namespace {

// Metropolis mixing of one coordinate inside one group, embedded into the
// full K x K coordinate matrix.
void embed_group_metropolis(const NetworkTopology& topo,
                            const std::vector<int>& members,
                            Eigen::MatrixXd& coord_matrix) {
  const int m = static_cast<int>(members.size());
  NetworkTopology sub;
  sub.agents = m;
  sub.dims.assign(m, 1);
  sub.adjacency.resize(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      sub.adjacency(i, j) = topo.adjacency(members[i], members[j]);
  const Eigen::MatrixXd a = metropolis_matrix(sub);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) coord_matrix(members[i], members[j]) = a(i, j);
}

}  // namespace

CombinationMatrix build_combination_matrix(const NetworkTopology& topo,
                                           const SubspaceBasis& basis) {
  validate_topology(topo);
  const int m_total = topo.total_dim();
  CombinationMatrix comb;
  comb.a = Eigen::MatrixXd::Zero(m_total, m_total);

  if (basis.structure == BasisStructure::Consensus) {
    const int dim = topo.dims[0];
    const Eigen::MatrixXd a = metropolis_matrix(topo);
    for (int k = 0; k < topo.agents; ++k)
      for (int l = 0; l < topo.agents; ++l)
        if (a(k, l) != 0.0)
          comb.a.block(k * dim, l * dim, dim, dim) =
              a(k, l) * Eigen::MatrixXd::Identity(dim, dim);
  } else if (basis.structure == BasisStructure::GroupBlocks) {
    const int dim = topo.dims[0];
    for (int j = 0; j < dim; ++j) {
      Eigen::MatrixXd coord =
          Eigen::MatrixXd::Zero(topo.agents, topo.agents);
      for (const auto& g : basis.groups) {
        if (std::find(g.coords.begin(), g.coords.end(), j) == g.coords.end())
          continue;
        embed_group_metropolis(topo, g.agents, coord);
      }
      for (int k = 0; k < topo.agents; ++k)
        for (int l = 0; l < topo.agents; ++l)
          comb.a(k * dim + j, l * dim + j) = coord(k, l);
    }
  } else {
    throw ConfigError(
        "combination matrices are only constructed for consensus or "
        "group-blocks bases; custom bases require a user-supplied matrix");
  }

  validate_combination(comb, topo, basis);
  return comb;
}

double spectral_radius_gap(const Eigen::MatrixXd& a,
                           const Eigen::MatrixXd& u) {
  if (a.rows() != a.cols() || a.rows() != u.rows())
    throw ConstructionError("dimension mismatch in spectral_radius_gap");
  const Eigen::MatrixXd shifted = a - u * u.transpose();
  Eigen::EigenSolver<Eigen::MatrixXd> solver(shifted, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

void validate_combination(const CombinationMatrix& comb,
                          const NetworkTopology& topo,
                          const SubspaceBasis& basis, double tol) {
  const int m_total = topo.total_dim();
  if (comb.a.rows() != m_total || comb.a.cols() != m_total)
    throw ConstructionError("combination matrix size mismatch");

  std::vector<std::string> violations;
  const double dev_right = (comb.a * basis.u - basis.u).cwiseAbs().maxCoeff();
  if (dev_right > tol)
    violations.push_back("A U != U (max deviation " + std::to_string(dev_right) +
                         ")");
  const double dev_left =
      (basis.u.transpose() * comb.a - basis.u.transpose())
          .cwiseAbs()
          .maxCoeff();
  if (dev_left > tol)
    violations.push_back("U^T A != U^T (max deviation " +
                         std::to_string(dev_left) + ")");
  const double rho = spectral_radius_gap(comb.a, basis.u);
  if (rho > 1.0 - 1e-8)
    violations.push_back("spectral radius of A - P_U is " +
                         std::to_string(rho) +
                         "; mixing has no contraction outside the subspace");
  for (int k = 0; k < topo.agents; ++k)
    for (int l = 0; l < topo.agents; ++l) {
      if (topo.adjacency(k, l)) continue;
      const double block =
          comb.a
              .block(topo.offset(k), topo.offset(l), topo.dims[k],
                     topo.dims[l])
              .cwiseAbs()
              .maxCoeff();
      if (block != 0.0)
        violations.push_back("nonzero block (" + std::to_string(k) + "," +
                             std::to_string(l) + ") between non-neighbors");
    }
  if (!violations.empty()) {
    std::string msg = "combination matrix invalid:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw ConstructionError(msg);
  }
}

}  // namespace defatc
