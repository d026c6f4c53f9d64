#include "defatc/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "defatc/diagnostics.hpp"
#include "defatc/io.hpp"
#include "defatc/metrics.hpp"

namespace defatc {

namespace {

using nlohmann::json;

int effective_jobs(const ExperimentConfig& config) {
  if (config.jobs > 0) return config.jobs;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::filesystem::path ensure_output_dir(const ExperimentConfig& config) {
  std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_metadata(const std::filesystem::path& path,
                    const ExperimentConfig& config, const json& extra) {
  json meta;
  meta["config"] = config.raw;
  meta["config_hash"] = config_hash(config);
  meta["master_seed"] = config.seed;
  for (const auto& [key, value] : extra.items()) meta[key] = value;
  std::ofstream out(path);
  out << meta.dump(2) << '\n';
}

bool keep_row(long i, long total, int thinning) {
  return i % thinning == 0 || i == total;
}

json stability_to_json(const StabilityReport& r) {
  json doc;
  doc["rho_gap"] = r.rho_gap;
  doc["rho_j"] = r.rho_j;
  doc["rho_i_minus_j"] = r.rho_i_minus_j;
  doc["v1"] = std::isfinite(r.v1) ? json(r.v1) : json("inf");
  doc["v2"] = r.v2;
  doc["epsilon"] = r.epsilon;
  doc["zeta"] = r.zeta;
  doc["gamma"] = r.gamma;
  doc["beta_c_max_sq"] = r.beta_c_max_sq;
  doc["lhs27"] = r.lhs27;
  doc["rhs27"] = std::isfinite(r.rhs27) ? json(r.rhs27) : json("inf");
  doc["lhs28"] = std::isfinite(r.lhs28) ? json(r.lhs28) : json("inf");
  doc["satisfied27"] = r.satisfied27;
  doc["satisfied28"] = r.satisfied28;
  doc["advisory"] = r.advisory;
  doc["note"] = r.note;
  return doc;
}

}  // namespace

int cmd_run(const ExperimentConfig& config, const std::string& level_dump_path) {
  const BuiltExperiment built = build_experiment(config);
  const std::string hash = config_hash(config);
  const auto dir = ensure_output_dir(config);
  const bool multi_mu = config.mu_list.size() > 1;

  std::vector<std::string> msd_header = {"iteration", "msd_db"};
  std::vector<std::string> rate_header = {"iteration", "bits_per_component"};
  if (multi_mu) {
    msd_header.insert(msd_header.begin() + 1, "mu");
    rate_header.insert(rate_header.begin() + 1, "mu");
  }
  CsvWriter msd_csv((dir / "msd.csv").string(), hash, msd_header);
  CsvWriter rate_csv((dir / "rate.csv").string(), hash, rate_header);

  json stats = json::array();
  try {
    for (double mu : config.mu_list) {
      const RunParams params = run_params_for(config, mu);
      MonteCarloOptions mc;
      mc.runs = config.monte_carlo_runs;
      mc.master_seed = config.seed;
      mc.iterations = iterations_for(config, built.problem.model, mu);
      mc.jobs = effective_jobs(config);
      const AveragedTrace avg = monte_carlo(built.problem, params, mc);

      const long total = mc.iterations;
      for (long i = 0; i <= total; ++i) {
        if (!keep_row(i, total, config.thinning)) continue;
        std::vector<std::string> row = {std::to_string(i),
                                        format_full(to_db(avg.msd[i]))};
        std::vector<std::string> rrow = {std::to_string(i),
                                         format_full(avg.rate[i])};
        if (multi_mu) {
          row.insert(row.begin() + 1, format_full(mu));
          rrow.insert(rrow.begin() + 1, format_full(mu));
        }
        msd_csv.row(row);
        rate_csv.row(rrow);
      }

      json entry;
      entry["mu"] = mu;
      entry["iterations"] = total;
      entry["run_seeds"] = avg.run_seeds;
      if (total >= config.steady_state_window + 1) {
        entry["steady_state_msd_db"] =
            to_db(steady_state(avg.msd, config.steady_state_window));
        entry["steady_state_rate"] =
            steady_state(avg.rate, config.steady_state_window);
      }
      stats.push_back(entry);

      if (!level_dump_path.empty() && config.algorithm != Algorithm::Atc) {
        std::ofstream dump(level_dump_path);
        dump << "# config_hash=" << hash << "\n";
        dump << "iteration,agent,levels...\n";
        RunOptions opts;
        opts.iterations = std::min<long>(total, 200);
        opts.seed = run_seed(config.seed, 0);
        opts.level_dump = &dump;
        run_experiment(built.problem, params, opts);
      }
    }
  } catch (const MonteCarloError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }

  json extra;
  extra["command"] = "run";
  extra["build"] = built.build_info;
  extra["results"] = stats;
  write_metadata(dir / "metadata.json", config, extra);
  return 0;
}

int cmd_rd_curve(const ExperimentConfig& config) {
  if (config.mu_list.size() != 1)
    throw ConfigError("rd-curve needs a single step-size mu");
  const BuiltExperiment built = build_experiment(config);
  const std::string hash = config_hash(config);
  const auto dir = ensure_output_dir(config);
  const double mu = config.mu_list[0];

  RdGrid grid;
  grid.epsilons = config.epsilon_grid.empty()
                      ? linear_grid(1e-3, 1.0, 25)
                      : config.epsilon_grid;
  grid.steady_state_window = config.steady_state_window;
  for (double z : (config.zeta_grid.empty() ? std::vector<double>{config.zeta}
                                            : config.zeta_grid))
    for (double g : (config.gamma_grid.empty()
                         ? std::vector<double>{config.gamma}
                         : config.gamma_grid))
      grid.hyper_pairs.emplace_back(z, g);

  MonteCarloOptions mc;
  mc.runs = config.monte_carlo_runs;
  mc.master_seed = config.seed;
  mc.iterations = iterations_for(config, built.problem.model, mu);
  mc.jobs = effective_jobs(config);

  const RunParams base = run_params_for(config, mu);
  const std::vector<RDPoint> points = rd_sweep(built.problem, base, mc, grid);

  CsvWriter csv((dir / "rd.csv").string(), hash,
                {"epsilon", "zeta", "gamma", "rate", "msd_db", "on_hull",
                 "diverged"});
  for (const auto& p : points) {
    csv.row({format_full(p.epsilon), format_full(p.zeta), format_full(p.gamma),
             p.diverged ? "" : format_full(p.rate),
             p.diverged ? "" : format_full(p.msd_db), p.on_hull ? "1" : "0",
             p.diverged ? "1" : "0"});
  }

  json extra;
  extra["command"] = "rd-curve";
  extra["build"] = built.build_info;
  extra["iterations"] = mc.iterations;
  extra["points"] = points.size();
  write_metadata(dir / "metadata.json", config, extra);
  return 0;
}

namespace {

// A fixed battery of operators exercised by `verify`, sized to the
// experiment's per-agent dimension.
std::vector<std::pair<std::string, OperatorSpec>> verify_battery(int dim) {
  const int c = std::max(1, std::min(4, dim));
  std::vector<std::pair<std::string, OperatorSpec>> specs;
  specs.emplace_back("identity", identity_op());
  specs.emplace_back("dithered-uniform", dithered_op(0.01));
  specs.emplace_back("anq", anq_op(0.5, 0.01));
  specs.emplace_back("rand-c-biased", rand_c_op(c, false));
  specs.emplace_back("rand-c-unbiased", rand_c_op(c, true));
  specs.emplace_back("gossip-biased", gossip_op(0.5, false));
  specs.emplace_back("gossip-unbiased", gossip_op(0.5, true));
  specs.emplace_back("qsgd", qsgd_op(2));
  specs.emplace_back("top-c-sparsifier", top_c_op(c));
  specs.emplace_back("top-c-dithered", top_c_quantizer_op(c, dithered_op(0.01)));
  specs.emplace_back("top-c-anq", top_c_quantizer_op(c, anq_op(0.5, 0.01)));
  specs.emplace_back("top-c-qsgd", top_c_quantizer_op(c, qsgd_op(2)));
  return specs;
}

std::vector<Eigen::VectorXd> audit_inputs(int dim, Rng& rng) {
  std::vector<Eigen::VectorXd> inputs;
  for (double scale : {0.01, 1.0, 100.0}) {
    for (int rep = 0; rep < 2; ++rep) {
      Eigen::VectorXd x(dim);
      for (int j = 0; j < dim; ++j) x[j] = scale * rng.gaussian();
      inputs.push_back(x);
    }
  }
  return inputs;
}

}  // namespace

int cmd_verify(const ExperimentConfig& config, std::ostream& out) {
  json checks = json::array();
  bool all_pass = true;
  const auto record = [&](const std::string& name, bool pass,
                          const json& details = json::object()) {
    json c;
    c["name"] = name;
    c["pass"] = pass;
    if (!details.empty()) c["details"] = details;
    checks.push_back(c);
    all_pass = all_pass && pass;
    out << (pass ? "[PASS] " : "[FAIL] ") << name << '\n';
  };

  BuiltExperiment built = build_experiment(config);
  const Problem& problem = built.problem;
  const int dim = config.dim;

  // Matrix invariants.
  {
    json details;
    bool pass = true;
    try {
      validate_combination(problem.combination, problem.topology,
                           problem.basis);
      details["rho_gap"] =
          spectral_radius_gap(problem.combination.a, problem.basis.u);
    } catch (const ConstructionError& e) {
      pass = false;
      details["error"] = e.what();
    }
    record("combination-matrix-conditions", pass, details);
  }
  {
    const Eigen::MatrixXd a = metropolis_matrix(problem.topology);
    const double row_dev =
        (a.rowwise().sum() - Eigen::VectorXd::Ones(a.rows())).cwiseAbs().maxCoeff();
    const double col_dev =
        (a.colwise().sum().transpose() - Eigen::VectorXd::Ones(a.cols()))
            .cwiseAbs()
            .maxCoeff();
    const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
    record("metropolis-doubly-stochastic",
           row_dev <= 1e-12 && col_dev <= 1e-12 && asym == 0.0,
           {{"row_dev", row_dev}, {"col_dev", col_dev}, {"asymmetry", asym}});
  }

  // Distortion and unbiasedness audits.
  {
    Rng rng(derive_seed(config.seed, {0x61756474ULL}));
    const auto inputs = audit_inputs(dim, rng);
    auto battery = verify_battery(dim);
    battery.emplace_back("configured-operator", config.op);
    for (const auto& [name, spec] : battery) {
      const DistortionAudit audit = distortion_audit(spec, 10000, inputs, rng);
      json details;
      details["cases"] = audit.cases.size();
      double worst_margin = 0.0;
      for (const auto& c : audit.cases)
        worst_margin = std::max(
            worst_margin, c.std_err > 0.0
                              ? (c.empirical_mse - c.bound) / c.std_err
                              : (c.empirical_mse > c.bound ? HUGE_VAL : 0.0));
      details["worst_excess_std_errs"] = worst_margin;
      record("distortion-bound/" + name, audit.pass, details);
      if (declared_params(spec, dim).unbiased) {
        const UnbiasednessAudit mean_audit =
            unbiasedness_audit(spec, 10000, inputs, rng);
        record("mean-zero/" + name, mean_audit.pass,
               {{"worst_ratio", mean_audit.worst_ratio}});
      }
    }
  }

  // Top-c energy identity.
  {
    Rng rng(derive_seed(config.seed, {0x656e6572ULL}));
    const int c = std::max(1, std::min(4, dim));
    bool pass = true;
    for (int t = 0; t < 10000 && pass; ++t) {
      Eigen::VectorXd x(dim);
      for (int j = 0; j < dim; ++j) x[j] = rng.gaussian();
      double kept = 0.0;
      for (int j : top_c_indices(x, c)) kept += x[j] * x[j];
      double total = 0.0;
      for (int j = 0; j < dim; ++j) total += x[j] * x[j];
      pass = kept >= (static_cast<double>(c) / dim) * total;
    }
    record("top-c-energy-identity", pass);
  }

  // Reduction identity: DEF-ATC with identity compression and
  // zeta = gamma = 1 follows ATC state for state.
  {
    RunParams def_params;
    def_params.algorithm = Algorithm::DefAtc;
    def_params.mu = config.mu_list[0];
    def_params.zeta = 1.0;
    def_params.gamma = 1.0;
    def_params.operators = {identity_op()};
    RunParams atc_params = def_params;
    atc_params.algorithm = Algorithm::Atc;
    RunOptions opts;
    opts.iterations = 300;
    opts.seed = run_seed(config.seed, 0);
    const RunTrace a = run_experiment(problem, def_params, opts);
    const RunTrace b = run_experiment(problem, atc_params, opts);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.msd.size(); ++i)
      worst = std::max(worst, std::abs(a.msd[i] - b.msd[i]));
    record("reduction-identity", worst <= 1e-12, {{"max_msd_diff", worst}});
  }

  // Error-feedback bookkeeping and broadcast consistency.
  {
    RunParams params = run_params_for(config, config.mu_list[0]);
    if (params.algorithm == Algorithm::Atc) {
      params.algorithm = Algorithm::DefAtc;
      params.zeta = params.gamma = 0.9;
      params.operators = {top_c_quantizer_op(std::max(1, std::min(4, dim)),
                                             dithered_op(config.mu_list[0]))};
    }
    auto states = initial_states(problem);
    std::vector<Rng> data_rngs, comp_rngs;
    for (int k = 0; k < problem.topology.agents; ++k) {
      data_rngs.push_back(data_stream(run_seed(config.seed, 0), k));
      comp_rngs.push_back(compression_stream(run_seed(config.seed, 0), k));
    }
    std::vector<double> bits;
    IterationDebug debug;
    bool residual_zero = true;
    bool copies_equal = true;
    for (int i = 0; i < 100; ++i) {
      def_atc_iteration(states, problem, params, data_rngs, comp_rngs, bits,
                        &debug);
      for (int k = 0; k < problem.topology.agents; ++k) {
        const Eigen::VectorXd residual =
            debug.chi[k] - debug.delta[k] - states[k].z;
        if ((residual.array() != 0.0).any()) residual_zero = false;
        for (int l : problem.topology.neighbors(k))
          if (states[k].phi.at(l) != states[l].phi.at(l)) copies_equal = false;
      }
    }
    record("error-feedback-bookkeeping", residual_zero);
    record("broadcast-consistency", copies_equal);
  }

  // Fixed-seed determinism.
  {
    RunParams params = run_params_for(config, config.mu_list[0]);
    RunOptions opts;
    opts.iterations = 200;
    opts.seed = run_seed(config.seed, 1);
    opts.record_agent_bits = true;
    const RunTrace a = run_experiment(problem, params, opts);
    const RunTrace b = run_experiment(problem, params, opts);
    const bool identical =
        a.msd == b.msd && a.rate == b.rate && a.agent_bits == b.agent_bits;
    record("fixed-seed-determinism", identical);
  }

  const auto dir = ensure_output_dir(config);
  json report;
  report["config_hash"] = config_hash(config);
  report["checks"] = checks;
  report["all_pass"] = all_pass;
  std::ofstream file(dir / "verify.json");
  file << report.dump(2) << '\n';
  out << (all_pass ? "verify: all checks passed\n"
                   : "verify: some checks FAILED\n");
  return all_pass ? 0 : 1;
}

int cmd_stability(const ExperimentConfig& config, std::ostream& out) {
  const BuiltExperiment built = build_experiment(config);
  const double beta =
      declared_params(config.op, config.dim).beta_sq;
  const StabilityReport report =
      stability_check(built.problem.combination, built.problem.basis,
                      built.problem.topology, config.zeta, config.gamma, beta);
  json doc = stability_to_json(report);
  doc["config_hash"] = config_hash(config);
  out << doc.dump(2) << '\n';
  const auto dir = ensure_output_dir(config);
  std::ofstream file(dir / "stability.json");
  file << doc.dump(2) << '\n';
  return 0;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Simulation engine for communication-efficient decentralized "
               "learning under subspace constraints"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  std::string level_dump;
  std::int64_t seed_override = -1;
  int jobs_override = -1;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "experiment config (JSON)")
        ->required();
    sub->add_option("--seed", seed_override, "override the master seed");
    sub->add_option("--out", out_override, "override the output directory");
    sub->add_option("--jobs", jobs_override,
                    "parallel Monte Carlo workers (0 = all cores)");
  };

  CLI::App* run = app.add_subcommand("run", "simulate and write MSD/rate CSVs");
  add_common(run);
  run->add_option("--dump-levels", level_dump,
                  "also write quantizer level codes for one short run");
  CLI::App* rd = app.add_subcommand("rd-curve", "rate-distortion sweep");
  add_common(rd);
  CLI::App* verify =
      app.add_subcommand("verify", "run the property suite and report");
  add_common(verify);
  CLI::App* stability =
      app.add_subcommand("stability-check", "print the stability report JSON");
  add_common(stability);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    ExperimentConfig config = load_config(config_path);
    if (seed_override >= 0) {
      config.seed = static_cast<std::uint64_t>(seed_override);
      config.raw["seed"] = seed_override;
    }
    if (!out_override.empty()) {
      config.output_dir = out_override;
      config.raw["output_dir"] = out_override;
    }
    if (jobs_override >= 0) {
      config.jobs = jobs_override;
      config.raw["jobs"] = jobs_override;
    }

    if (run->parsed()) return cmd_run(config, level_dump);
    if (rd->parsed()) return cmd_rd_curve(config);
    if (verify->parsed()) return cmd_verify(config, std::cout);
    if (stability->parsed()) return cmd_stability(config, std::cout);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace defatc
