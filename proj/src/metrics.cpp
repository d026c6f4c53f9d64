#include "defatc/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

#include "defatc/errors.hpp"

namespace defatc {

double to_db(double x) { return 10.0 * std::log10(x); }

double steady_state(const std::vector<double>& curve, int window) {
  if (window < 1) throw Error("steady_state: window must be positive");
  if (static_cast<int>(curve.size()) <= window)
    throw Error("steady_state: trace of length " +
                std::to_string(curve.size()) +
                " is too short for a window of " + std::to_string(window));
  return std::accumulate(curve.end() - window, curve.end(), 0.0) / window;
}

std::uint64_t run_seed(std::uint64_t master_seed, int run_index) {
  return derive_seed(master_seed,
                     {0x72756e73ULL, static_cast<std::uint64_t>(run_index)});
}

AveragedTrace monte_carlo(const Problem& problem, const RunParams& params,
                          const MonteCarloOptions& options) {
  if (options.runs < 1) throw ConfigError("monte carlo run count must be >= 1");
  const int runs = options.runs;

  std::vector<RunTrace> traces(runs);
  std::vector<std::pair<int, std::string>> failures;
  std::mutex failures_mutex;

  const auto work = [&](int r) {
    RunOptions run_options;
    run_options.iterations = options.iterations;
    run_options.seed = run_seed(options.master_seed, r);
    run_options.record_agent_bits = options.record_agent_bits;
    try {
      traces[r] = run_experiment(problem, params, run_options);
    } catch (const DivergenceError& e) {
      std::lock_guard<std::mutex> lock(failures_mutex);
      failures.emplace_back(r, e.what());
    }
  };

  const int jobs = std::max(1, options.jobs);
  if (jobs == 1 || runs == 1) {
    for (int r = 0; r < runs; ++r) work(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    const int threads = std::min(jobs, runs);
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < runs; r = next.fetch_add(1))
          work(r);
      });
    for (auto& t : pool) t.join();
  }

  if (!failures.empty()) {
    std::sort(failures.begin(), failures.end());
    std::vector<std::uint64_t> seeds;
    std::string msg = "monte carlo runs diverged:";
    for (const auto& [r, what] : failures) {
      seeds.push_back(run_seed(options.master_seed, r));
      msg += "\n  run " + std::to_string(r) + " (seed " +
             std::to_string(seeds.back()) + "): " + what;
    }
    throw MonteCarloError(msg, seeds);
  }

  AveragedTrace out;
  const std::size_t len = traces[0].msd.size();
  out.msd.assign(len, 0.0);
  out.rate.assign(len, 0.0);
  for (int r = 0; r < runs; ++r) {
    out.run_seeds.push_back(traces[r].seed);
    for (std::size_t i = 0; i < len; ++i) {
      out.msd[i] += traces[r].msd[i];
      out.rate[i] += traces[r].rate[i];
    }
  }
  for (std::size_t i = 0; i < len; ++i) {
    out.msd[i] /= runs;
    out.rate[i] /= runs;
  }
  return out;
}

std::vector<double> rate_curve_from_bits(const Eigen::MatrixXd& agent_bits,
                                         const std::vector<int>& dims) {
  const int iterations = static_cast<int>(agent_bits.rows());
  const int agents = static_cast<int>(agent_bits.cols());
  std::vector<double> rate(iterations, 0.0);
  for (int i = 0; i < iterations; ++i) {
    double sum = 0.0;
    for (int k = 0; k < agents; ++k) sum += agent_bits(i, k) / dims[k];
    rate[i] = sum / agents;
  }
  return rate;
}

std::vector<double> linear_grid(double lo, double hi, int count) {
  if (count < 1) throw ConfigError("grid needs at least one point");
  std::vector<double> grid(count);
  if (count == 1) {
    grid[0] = lo;
    return grid;
  }
  for (int i = 0; i < count; ++i)
    grid[i] = lo + (hi - lo) * i / (count - 1);
  return grid;
}

void set_resolution(OperatorSpec& spec, double value) {
  switch (spec.kind) {
    case OperatorKind::DitheredUniform:
      spec.delta = value;
      return;
    case OperatorKind::Anq:
      spec.eta = value;
      return;
    case OperatorKind::TopCQuantizer:
      set_resolution(*spec.inner, value);
      return;
    default:
      throw ConfigError("operator '" + operator_kind_name(spec.kind) +
                        "' has no resolution parameter to sweep");
  }
}

std::vector<RDPoint> rd_sweep(const Problem& problem, const RunParams& base,
                              const MonteCarloOptions& mc, const RdGrid& grid) {
  std::vector<std::pair<double, double>> hyper = grid.hyper_pairs;
  if (hyper.empty()) hyper.emplace_back(base.zeta, base.gamma);

  std::vector<RDPoint> points;
  for (const auto& [zeta, gamma] : hyper) {
    for (double eps : grid.epsilons) {
      RunParams params = base;
      params.zeta = zeta;
      params.gamma = gamma;
      const double resolution = std::pow(base.mu, (1.0 + eps) / 2.0);
      for (auto& op : params.operators) set_resolution(op, resolution);

      RDPoint point;
      point.epsilon = eps;
      point.zeta = zeta;
      point.gamma = gamma;
      try {
        const AveragedTrace avg = monte_carlo(problem, params, mc);
        point.msd = steady_state(avg.msd, grid.steady_state_window);
        point.rate = steady_state(avg.rate, grid.steady_state_window);
        point.msd_db = to_db(point.msd);
      } catch (const MonteCarloError&) {
        point.diverged = true;
      }
      points.push_back(point);
    }
  }
  mark_hull(points);
  return points;
}

namespace {

double cross(const RDPoint& o, const RDPoint& a, const RDPoint& b) {
  return (a.rate - o.rate) * (b.msd_db - o.msd_db) -
         (a.msd_db - o.msd_db) * (b.rate - o.rate);
}

bool dominates(const RDPoint& a, const RDPoint& b) {
  return a.rate <= b.rate && a.msd_db <= b.msd_db &&
         (a.rate < b.rate || a.msd_db < b.msd_db);
}

}  // namespace

std::vector<RDPoint> lower_convex_hull(const std::vector<RDPoint>& points) {
  std::vector<RDPoint> valid;
  for (const auto& p : points)
    if (!p.diverged) valid.push_back(p);
  if (valid.empty()) return {};

  std::vector<RDPoint> front;
  for (const auto& p : valid) {
    bool keep = true;
    for (const auto& q : valid)
      if (dominates(q, p)) {
        keep = false;
        break;
      }
    if (keep) front.push_back(p);
  }
  std::sort(front.begin(), front.end(), [](const RDPoint& a, const RDPoint& b) {
    if (a.rate != b.rate) return a.rate < b.rate;
    return a.msd_db < b.msd_db;
  });

  // Monotone chain; popping only on strict right turns keeps collinear
  // boundary points.
  std::vector<RDPoint> hull;
  for (const auto& p : front) {
    while (hull.size() >= 2 &&
           cross(hull[hull.size() - 2], hull[hull.size() - 1], p) < 0.0)
      hull.pop_back();
    hull.push_back(p);
  }
  return hull;
}

void mark_hull(std::vector<RDPoint>& points) {
  const std::vector<RDPoint> hull = lower_convex_hull(points);
  for (auto& p : points) {
    p.on_hull = false;
    for (const auto& h : hull)
      if (!p.diverged && p.rate == h.rate && p.msd_db == h.msd_db &&
          p.epsilon == h.epsilon && p.zeta == h.zeta && p.gamma == h.gamma) {
        p.on_hull = true;
        break;
      }
  }
}

}  // namespace defatc
