#include "defatc/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "defatc/io.hpp"
#include "defatc/metrics.hpp"

namespace defatc {

namespace {

using nlohmann::json;

constexpr std::uint64_t kVarianceTag = 0x76617273ULL;  // "vars"
constexpr std::uint64_t kModelTag = 0x77737472ULL;     // "wstr"

std::string join_path(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

class Validator {
 public:
  explicit Validator(const json& root) : root_(root) {}

  void fail(const std::string& path, const std::string& message) {
    issues_.push_back(path + ": " + message);
  }

  const json* object(const std::string& path, const json& node,
                     const std::string& key, bool required) {
    if (!node.contains(key)) {
      if (required) fail(join_path(path, key), "missing");
      return nullptr;
    }
    if (!node[key].is_object()) {
      fail(join_path(path, key), "expected an object");
      return nullptr;
    }
    return &node[key];
  }

  bool has_number(const json& node, const std::string& key) {
    return node.contains(key) && node[key].is_number();
  }

  double number(const std::string& path, const json& node,
                const std::string& key, bool required, double fallback) {
    if (!node.contains(key)) {
      if (required) fail(join_path(path, key), "missing");
      return fallback;
    }
    if (!node[key].is_number()) {
      fail(join_path(path, key), "expected a number");
      return fallback;
    }
    return node[key].get<double>();
  }

  long integer(const std::string& path, const json& node,
               const std::string& key, bool required, long fallback) {
    if (!node.contains(key)) {
      if (required) fail(join_path(path, key), "missing");
      return fallback;
    }
    if (!node[key].is_number_integer()) {
      fail(join_path(path, key), "expected an integer");
      return fallback;
    }
    return node[key].get<long>();
  }

  bool boolean(const std::string& path, const json& node,
               const std::string& key, bool fallback) {
    if (!node.contains(key)) return fallback;
    if (!node[key].is_boolean()) {
      fail(join_path(path, key), "expected a boolean");
      return fallback;
    }
    return node[key].get<bool>();
  }

  std::string text(const std::string& path, const json& node,
                   const std::string& key, bool required,
                   const std::string& fallback) {
    if (!node.contains(key)) {
      if (required) fail(join_path(path, key), "missing");
      return fallback;
    }
    if (!node[key].is_string()) {
      fail(join_path(path, key), "expected a string");
      return fallback;
    }
    return node[key].get<std::string>();
  }

  void known_keys(const std::string& path, const json& node,
                  const std::set<std::string>& allowed) {
    if (!node.is_object()) return;
    for (const auto& [key, value] : node.items())
      if (!allowed.count(key)) fail(join_path(path, key), "unknown key");
  }

  void finish() {
    if (!issues_.empty()) throw ConfigError(issues_);
  }

  bool clean() const { return issues_.empty(); }

 private:
  const json& root_;
  std::vector<std::string> issues_;
};

// Index collections appear either as {"from": a, "to": b} (inclusive) or
// as an explicit array of indices.
std::vector<int> parse_index_set(Validator& v, const std::string& path,
                                 const json& node) {
  std::vector<int> out;
  if (node.is_object()) {
    v.known_keys(path, node, {"from", "to"});
    const long from = v.integer(path, node, "from", true, 0);
    const long to = v.integer(path, node, "to", true, -1);
    if (to < from) {
      v.fail(path, "'to' must be >= 'from'");
      return out;
    }
    for (long i = from; i <= to; ++i) out.push_back(static_cast<int>(i));
  } else if (node.is_array()) {
    for (const auto& e : node) {
      if (!e.is_number_integer()) {
        v.fail(path, "expected integer indices");
        return out;
      }
      out.push_back(e.get<int>());
    }
  } else {
    v.fail(path, "expected {from,to} or an index array");
  }
  return out;
}

OperatorSpec parse_operator(Validator& v, const std::string& path,
                            const json& node) {
  OperatorSpec spec;
  v.known_keys(path, node,
               {"type", "delta", "omega", "eta", "c", "q", "s", "unbiased",
                "b_hp", "encode_locations", "inner"});
  const std::string type = v.text(path, node, "type", true, "identity");
  spec.b_hp = static_cast<int>(v.integer(path, node, "b_hp", false, 32));
  spec.encode_locations = v.boolean(path, node, "encode_locations", false);
  if (type == "identity") {
    spec.kind = OperatorKind::Identity;
  } else if (type == "dithered-uniform") {
    spec.kind = OperatorKind::DitheredUniform;
    spec.delta = v.number(path, node, "delta", true, 0.0);
  } else if (type == "anq") {
    spec.kind = OperatorKind::Anq;
    spec.omega = v.number(path, node, "omega", true, 0.0);
    spec.eta = v.number(path, node, "eta", true, 0.0);
  } else if (type == "rand-c") {
    spec.kind = OperatorKind::RandC;
    spec.c = static_cast<int>(v.integer(path, node, "c", true, 0));
    spec.unbiased = v.boolean(path, node, "unbiased", true);
  } else if (type == "gossip") {
    spec.kind = OperatorKind::Gossip;
    spec.q = v.number(path, node, "q", true, 1.0);
    spec.unbiased = v.boolean(path, node, "unbiased", true);
  } else if (type == "qsgd") {
    spec.kind = OperatorKind::Qsgd;
    spec.s = static_cast<int>(v.integer(path, node, "s", true, 1));
  } else if (type == "top-c-sparsifier") {
    spec.kind = OperatorKind::TopCSparsifier;
    spec.c = static_cast<int>(v.integer(path, node, "c", true, 0));
  } else if (type == "top-c-quantizer") {
    spec.kind = OperatorKind::TopCQuantizer;
    spec.c = static_cast<int>(v.integer(path, node, "c", true, 0));
    if (const json* inner = v.object(path, node, "inner", true))
      spec.inner =
          std::make_shared<OperatorSpec>(parse_operator(v, path + ".inner", *inner));
  } else {
    v.fail(path + ".type", "unknown operator '" + type + "'");
  }
  return spec;
}

void parse_variance(Validator& v, const std::string& path, const json& parent,
                    const std::string& key, bool& is_uniform,
                    std::pair<double, double>& interval,
                    std::vector<double>& values) {
  if (!parent.contains(key)) {
    v.fail(join_path(path, key), "missing");
    return;
  }
  const json& node = parent[key];
  if (node.is_number()) {
    values.assign(1, node.get<double>());
  } else if (node.is_array()) {
    for (const auto& e : node) {
      if (!e.is_number()) {
        v.fail(path + "." + key, "expected numbers");
        return;
      }
      values.push_back(e.get<double>());
    }
  } else if (node.is_object()) {
    v.known_keys(path + "." + key, node, {"uniform"});
    if (!node.contains("uniform") || !node["uniform"].is_array() ||
        node["uniform"].size() != 2) {
      v.fail(path + "." + key, "expected {\"uniform\": [lo, hi]}");
      return;
    }
    is_uniform = true;
    interval = {node["uniform"][0].get<double>(),
                node["uniform"][1].get<double>()};
    if (!(interval.first >= 0.0) || interval.second < interval.first)
      v.fail(path + "." + key, "uniform interval must satisfy 0 <= lo <= hi");
  } else {
    v.fail(path + "." + key, "expected a number, array, or {uniform: [lo,hi]}");
  }
  for (double x : values)
    if (!(x >= 0.0)) v.fail(path + "." + key, "variances must be >= 0");
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  Validator v(doc);
  ExperimentConfig cfg;
  cfg.raw = doc;

  v.known_keys("", doc,
               {"topology", "basis", "model", "algorithm", "operator", "mu",
                "zeta", "gamma", "iterations", "monte_carlo_runs", "seed",
                "steady_state_window", "thinning", "jobs", "output_dir",
                "epsilon_grid", "zeta_grid", "gamma_grid"});

  // --- topology ---
  if (const json* topo = v.object("", doc, "topology", true)) {
    v.known_keys("topology", *topo, {"type", "agents", "radius", "seed", "links"});
    cfg.topology_type = v.text("topology", *topo, "type", true, "complete");
    cfg.agents =
        static_cast<int>(v.integer("topology", *topo, "agents", true, 0));
    if (cfg.agents < 1) v.fail("topology.agents", "must be >= 1");
    if (cfg.topology_type == "random-geometric") {
      cfg.radius = v.number("topology", *topo, "radius", true, 0.0);
      if (!(cfg.radius > 0.0)) v.fail("topology.radius", "must be positive");
    } else if (cfg.topology_type == "explicit") {
      if (!topo->contains("links") || !(*topo)["links"].is_array()) {
        v.fail("topology.links", "explicit topology needs a link array");
      } else {
        for (const auto& link : (*topo)["links"]) {
          if (!link.is_array() || link.size() != 2 ||
              !link[0].is_number_integer() || !link[1].is_number_integer()) {
            v.fail("topology.links", "each link must be a pair of indices");
            break;
          }
          cfg.links.emplace_back(link[0].get<int>(), link[1].get<int>());
        }
      }
    } else if (cfg.topology_type != "complete" && cfg.topology_type != "ring") {
      v.fail("topology.type",
             "expected complete | ring | random-geometric | explicit");
    }
  }

  // --- basis ---
  if (const json* basis = v.object("", doc, "basis", true)) {
    v.known_keys("basis", *basis, {"type", "dim", "groups", "u_file", "a_file"});
    cfg.basis_type = v.text("basis", *basis, "type", true, "consensus");
    cfg.dim = static_cast<int>(v.integer("basis", *basis, "dim", true, 0));
    if (cfg.dim < 1) v.fail("basis.dim", "must be >= 1");
    if (cfg.basis_type == "groups") {
      if (!basis->contains("groups") || !(*basis)["groups"].is_array() ||
          (*basis)["groups"].empty()) {
        v.fail("basis.groups", "group basis needs a non-empty group array");
      } else {
        int index = 0;
        for (const auto& entry : (*basis)["groups"]) {
          const std::string path = "basis.groups[" + std::to_string(index) + "]";
          v.known_keys(path, entry, {"coords", "agent_sets"});
          if (!entry.contains("coords") || !entry.contains("agent_sets") ||
              !entry["agent_sets"].is_array()) {
            v.fail(path, "needs 'coords' and an 'agent_sets' array");
            ++index;
            continue;
          }
          const std::vector<int> coords =
              parse_index_set(v, path + ".coords", entry["coords"]);
          int set_index = 0;
          for (const auto& agents : entry["agent_sets"]) {
            ConsensusGroup group;
            group.coords = coords;
            group.agents = parse_index_set(
                v, path + ".agent_sets[" + std::to_string(set_index) + "]",
                agents);
            cfg.groups.push_back(std::move(group));
            ++set_index;
          }
          ++index;
        }
      }
    } else if (cfg.basis_type == "custom") {
      cfg.u_file = v.text("basis", *basis, "u_file", true, "");
      cfg.a_file = v.text("basis", *basis, "a_file", true, "");
    } else if (cfg.basis_type != "consensus") {
      v.fail("basis.type", "expected consensus | groups | custom");
    }
  }

  // --- model ---
  if (const json* model = v.object("", doc, "model", true)) {
    v.known_keys("model", *model,
                 {"regressor_variance", "noise_variance", "w_star"});
    parse_variance(v, "model", *model, "regressor_variance",
                   cfg.reg_var_uniform, cfg.reg_var_interval,
                   cfg.reg_var_values);
    parse_variance(v, "model", *model, "noise_variance", cfg.noise_var_uniform,
                   cfg.noise_var_interval, cfg.noise_var_values);
    for (double x : cfg.reg_var_values)
      if (!(x > 0.0))
        v.fail("model.regressor_variance", "must be strictly positive");
    if (cfg.reg_var_uniform && !(cfg.reg_var_interval.first > 0.0))
      v.fail("model.regressor_variance", "must be strictly positive");
    if (const json* w = v.object("model", *model, "w_star", true)) {
      v.known_keys("model.w_star", *w,
                   {"mode", "perturbation_variance", "values"});
      cfg.w_star_mode = v.text("model.w_star", *w, "mode", true, "");
      if (cfg.w_star_mode == "group-perturbed") {
        cfg.perturbation_variance =
            v.number("model.w_star", *w, "perturbation_variance", true, 0.0);
        if (cfg.perturbation_variance < 0.0)
          v.fail("model.w_star.perturbation_variance", "must be >= 0");
      } else if (cfg.w_star_mode == "explicit") {
        if (!w->contains("values") || !(*w)["values"].is_array()) {
          v.fail("model.w_star.values", "explicit mode needs value arrays");
        } else {
          for (const auto& row : (*w)["values"]) {
            Eigen::VectorXd vec(row.size());
            for (std::size_t j = 0; j < row.size(); ++j)
              vec[j] = row[j].get<double>();
            cfg.w_star_values.push_back(std::move(vec));
          }
        }
      } else if (cfg.w_star_mode != "consensus-unit-norm") {
        v.fail("model.w_star.mode",
               "expected consensus-unit-norm | group-perturbed | explicit");
      }
    }
  }

  // --- algorithm & operator ---
  const std::string algo = v.text("", doc, "algorithm", true, "def-atc");
  if (algo == "atc") cfg.algorithm = Algorithm::Atc;
  else if (algo == "def-atc") cfg.algorithm = Algorithm::DefAtc;
  else if (algo == "def-atc-no-ef") cfg.algorithm = Algorithm::DefAtcNoEf;
  else v.fail("algorithm", "expected atc | def-atc | def-atc-no-ef");

  if (const json* op = v.object("", doc, "operator", true))
    cfg.op = parse_operator(v, "operator", *op);

  // --- scalars ---
  if (doc.contains("mu") && doc["mu"].is_array()) {
    for (const auto& m : doc["mu"]) {
      if (!m.is_number()) {
        v.fail("mu", "expected numbers");
        break;
      }
      cfg.mu_list.push_back(m.get<double>());
    }
  } else {
    cfg.mu_list.push_back(v.number("", doc, "mu", true, 0.0));
  }
  for (double mu : cfg.mu_list)
    if (!(mu > 0.0)) v.fail("mu", "step-sizes must be positive");

  cfg.zeta = v.number("", doc, "zeta", false, 1.0);
  if (!(cfg.zeta > 0.0 && cfg.zeta <= 1.0)) v.fail("zeta", "must be in (0, 1]");
  cfg.gamma = v.number("", doc, "gamma", false, 1.0);
  if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0))
    v.fail("gamma", "must be in (0, 1]");

  cfg.iterations = v.integer("", doc, "iterations", false, 0);
  if (cfg.iterations < 0) v.fail("iterations", "must be >= 0");
  cfg.monte_carlo_runs =
      static_cast<int>(v.integer("", doc, "monte_carlo_runs", false, 1));
  if (cfg.monte_carlo_runs < 1) v.fail("monte_carlo_runs", "must be >= 1");
  cfg.seed = static_cast<std::uint64_t>(v.integer("", doc, "seed", false, 1));
  cfg.steady_state_window =
      static_cast<int>(v.integer("", doc, "steady_state_window", false, 100));
  if (cfg.steady_state_window < 1)
    v.fail("steady_state_window", "must be >= 1");
  cfg.thinning = static_cast<int>(v.integer("", doc, "thinning", false, 1));
  if (cfg.thinning < 1) v.fail("thinning", "must be >= 1");
  cfg.jobs = static_cast<int>(v.integer("", doc, "jobs", false, 0));
  if (cfg.jobs < 0) v.fail("jobs", "must be >= 0");
  cfg.output_dir = v.text("", doc, "output_dir", false, "out");

  // --- rd grids ---
  if (doc.contains("epsilon_grid")) {
    const json& grid = doc["epsilon_grid"];
    if (grid.is_array()) {
      for (const auto& e : grid) cfg.epsilon_grid.push_back(e.get<double>());
    } else if (grid.is_object()) {
      v.known_keys("epsilon_grid", grid, {"count", "min", "max"});
      const int count =
          static_cast<int>(v.integer("epsilon_grid", grid, "count", true, 0));
      const double lo = v.number("epsilon_grid", grid, "min", true, 0.0);
      const double hi = v.number("epsilon_grid", grid, "max", true, 0.0);
      if (count >= 1 && v.clean())
        cfg.epsilon_grid = linear_grid(lo, hi, count);
    } else {
      v.fail("epsilon_grid", "expected an array or {count, min, max}");
    }
    for (double e : cfg.epsilon_grid)
      if (!(e > 0.0 && e <= 1.0)) v.fail("epsilon_grid", "epsilon in (0, 1]");
  }
  for (const char* key : {"zeta_grid", "gamma_grid"}) {
    if (!doc.contains(key)) continue;
    if (!doc[key].is_array()) {
      v.fail(key, "expected an array");
      continue;
    }
    auto& target = std::string(key) == "zeta_grid" ? cfg.zeta_grid : cfg.gamma_grid;
    for (const auto& e : doc[key]) {
      const double val = e.get<double>();
      if (!(val > 0.0 && val <= 1.0)) v.fail(key, "values must be in (0, 1]");
      target.push_back(val);
    }
  }

  // --- cross-field checks that need no construction ---
  if (v.clean()) {
    if (cfg.basis_type == "groups") {
      // The covering groups of every coordinate must partition the agents.
      for (int j = 0; j < cfg.dim; ++j) {
        std::vector<int> cover(cfg.agents, 0);
        bool involved = false;
        for (const auto& g : cfg.groups) {
          if (std::find(g.coords.begin(), g.coords.end(), j) == g.coords.end())
            continue;
          involved = true;
          for (int k : g.agents)
            if (k >= 0 && k < cfg.agents) ++cover[k];
            else v.fail("basis.groups", "agent index " + std::to_string(k) +
                                            " out of range");
        }
        if (!involved) {
          v.fail("basis.groups",
                 "coordinate " + std::to_string(j) + " is covered by no group");
          continue;
        }
        for (int k = 0; k < cfg.agents; ++k) {
          if (cover[k] == 0)
            v.fail("basis.groups", "coordinate " + std::to_string(j) +
                                       ": agent " + std::to_string(k) +
                                       " is uncovered");
          else if (cover[k] > 1)
            v.fail("basis.groups", "coordinate " + std::to_string(j) +
                                       ": agent " + std::to_string(k) +
                                       " is covered twice");
        }
      }
      for (const auto& g : cfg.groups)
        for (int j : g.coords)
          if (j < 0 || j >= cfg.dim)
            v.fail("basis.groups",
                   "coordinate " + std::to_string(j) + " out of range");
    }
    if (!cfg.reg_var_values.empty() && cfg.reg_var_values.size() != 1 &&
        static_cast<int>(cfg.reg_var_values.size()) != cfg.agents)
      v.fail("model.regressor_variance",
             "expected 1 or " + std::to_string(cfg.agents) + " entries");
    if (!cfg.noise_var_values.empty() && cfg.noise_var_values.size() != 1 &&
        static_cast<int>(cfg.noise_var_values.size()) != cfg.agents)
      v.fail("model.noise_variance",
             "expected 1 or " + std::to_string(cfg.agents) + " entries");
    if (cfg.w_star_mode == "explicit") {
      if (static_cast<int>(cfg.w_star_values.size()) != cfg.agents)
        v.fail("model.w_star.values",
               "expected one vector per agent (" + std::to_string(cfg.agents) +
                   ")");
      for (const auto& w : cfg.w_star_values)
        if (static_cast<int>(w.size()) != cfg.dim)
          v.fail("model.w_star.values", "vector length must equal basis.dim");
    }
    if (cfg.w_star_mode == "group-perturbed" && cfg.basis_type != "groups")
      v.fail("model.w_star.mode",
             "group-perturbed models need a groups basis");
    try {
      validate_spec(cfg.op, cfg.dim);
    } catch (const ConfigError& e) {
      for (const auto& issue : e.issues) v.fail("operator", issue);
    }
  }

  v.finish();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("parse error in ") + path + ": " + e.what());
  }
  return parse_config(doc);
}

std::string config_hash(const ExperimentConfig& config) {
  // nlohmann::json::dump emits keys sorted, so the digest is canonical.
  return sha256_hex(config.raw.dump());
}

namespace {

Eigen::MatrixXd load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open matrix file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows[0].size())
      throw ConfigError("ragged matrix in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("empty matrix file: " + path);
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

std::vector<double> expand_variances(bool uniform,
                                     const std::pair<double, double>& interval,
                                     const std::vector<double>& values,
                                     int agents, Rng& rng) {
  std::vector<double> out(agents);
  if (uniform) {
    for (int k = 0; k < agents; ++k)
      out[k] = rng.uniform(interval.first, interval.second);
  } else if (values.size() == 1) {
    out.assign(agents, values[0]);
  } else {
    out = values;
  }
  return out;
}

}  // namespace

long iterations_for(const ExperimentConfig& config,
                    const LinearRegressionModel& model, double mu) {
  if (config.iterations > 0) return config.iterations;
  return default_iterations(model, mu);
}

RunParams run_params_for(const ExperimentConfig& config, double mu) {
  RunParams params;
  params.algorithm = config.algorithm;
  params.mu = mu;
  params.zeta = config.algorithm == Algorithm::Atc ? 1.0 : config.zeta;
  params.gamma = config.algorithm == Algorithm::Atc ? 1.0 : config.gamma;
  params.operators = {config.op};
  return params;
}

BuiltExperiment build_experiment(const ExperimentConfig& config) {
  BuiltExperiment built;
  Problem& problem = built.problem;

  // Topology.
  if (config.topology_type == "complete") {
    problem.topology = complete_topology(config.agents, config.dim);
  } else if (config.topology_type == "ring") {
    problem.topology = ring_topology(config.agents, config.dim);
  } else if (config.topology_type == "random-geometric") {
    problem.topology = random_geometric_topology(config.agents, config.dim,
                                                 config.radius, config.seed);
  } else {
    problem.topology =
        topology_from_links(config.agents, config.dim, config.links);
  }

  // Basis and combination matrix.
  if (config.basis_type == "consensus") {
    problem.basis = consensus_basis(config.agents, config.dim);
    problem.combination =
        build_combination_matrix(problem.topology, problem.basis);
  } else if (config.basis_type == "groups") {
    problem.basis = group_consensus_basis(problem.topology, config.groups);
    problem.combination =
        build_combination_matrix(problem.topology, problem.basis);
  } else {
    problem.basis.structure = BasisStructure::Custom;
    problem.basis.u = load_matrix_csv(config.u_file);
    if (problem.basis.u.rows() != problem.topology.total_dim())
      throw ConfigError("custom basis rows must equal K * dim");
    validate_basis(problem.basis.u);
    problem.combination.a = load_matrix_csv(config.a_file);
    validate_combination(problem.combination, problem.topology, problem.basis);
  }

  // Model.
  Rng variance_rng(derive_seed(config.seed, {kVarianceTag}));
  problem.model.sigma_u_sq =
      expand_variances(config.reg_var_uniform, config.reg_var_interval,
                       config.reg_var_values, config.agents, variance_rng);
  problem.model.sigma_v_sq =
      expand_variances(config.noise_var_uniform, config.noise_var_interval,
                       config.noise_var_values, config.agents, variance_rng);

  Rng model_rng(derive_seed(config.seed, {kModelTag}));
  if (config.w_star_mode == "consensus-unit-norm") {
    Eigen::VectorXd shared(config.dim);
    for (int j = 0; j < config.dim; ++j) shared[j] = model_rng.gaussian();
    shared.normalize();
    problem.model.w_star.assign(config.agents, shared);
  } else if (config.w_star_mode == "group-perturbed") {
    problem.model.w_star = perturbed_group_models(
        problem.topology, config.groups, config.perturbation_variance,
        model_rng);
  } else {
    problem.model.w_star = config.w_star_values;
  }
  validate_model(problem.model, problem.topology);

  problem.truth =
      constrained_optimum(problem.model, problem.basis, problem.topology);

  built.build_info["sigma_u_sq"] = problem.model.sigma_u_sq;
  built.build_info["sigma_v_sq"] = problem.model.sigma_v_sq;
  built.build_info["subspace_dim"] = problem.basis.subspace_dim();
  built.build_info["total_dim"] = problem.topology.total_dim();
  built.build_info["spectral_gap_radius"] =
      spectral_radius_gap(problem.combination.a, problem.basis.u);
  {
    std::vector<long> iterations;
    for (double mu : config.mu_list)
      iterations.push_back(iterations_for(config, problem.model, mu));
    built.build_info["iterations_per_mu"] = iterations;
    built.build_info["iteration_rule"] =
        config.iterations > 0 ? "configured"
                              : "ceil(12 / (mu * min_k 2 sigma_u_k^2))";
  }
  return built;
}

}  // namespace defatc
