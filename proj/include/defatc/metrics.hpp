#pragma once

#include <vector>

#include "defatc/engine.hpp"

namespace defatc {

double to_db(double x);

/// Mean of the last `window` samples; the operational "after convergence"
/// estimator. Throws when the curve is not longer than the window.
double steady_state(const std::vector<double>& curve, int window = 100);

struct MonteCarloOptions {
  int runs = 1;
  std::uint64_t master_seed = 1;
  long iterations = 0;
  int jobs = 1;  // <= 1 means sequential
  bool record_agent_bits = false;
};

/// Pointwise mean of independent runs with seeds derived from the master
/// seed. Aggregation is ordered by run index, so the result does not
/// depend on scheduling. Throws MonteCarloError listing the seeds of any
/// diverged runs.
struct AveragedTrace {
  std::vector<double> msd;
  std::vector<double> rate;
  std::vector<std::uint64_t> run_seeds;
};

AveragedTrace monte_carlo(const Problem& problem, const RunParams& params,
                          const MonteCarloOptions& options);

std::uint64_t run_seed(std::uint64_t master_seed, int run_index);

/// Recomputes the network bit-rate curve from raw per-agent bit logs.
std::vector<double> rate_curve_from_bits(const Eigen::MatrixXd& agent_bits,
                                         const std::vector<int>& dims);

/// One operating point of a rate-distortion sweep.
struct RDPoint {
  double epsilon = 0.0;
  double zeta = 0.0;
  double gamma = 0.0;
  double rate = 0.0;     // steady-state bits per node per component
  double msd = 0.0;      // steady-state MSD, linear scale
  double msd_db = 0.0;
  bool on_hull = false;
  bool diverged = false;
};

/// 25 epsilon values linearly spaced over [lo, hi] by default.
std::vector<double> linear_grid(double lo, double hi, int count);

struct RdGrid {
  std::vector<double> epsilons;
  // (zeta, gamma) pairs to explore; empty means "use the base params".
  std::vector<std::pair<double, double>> hyper_pairs;
  int steady_state_window = 100;
};

/// For each grid point sets the operator resolution to mu^((1+eps)/2)
/// (the quantization step of dithered-uniform rules, the scale eta of ANQ
/// rules, recursively for composites), runs a Monte Carlo average, and
/// extracts the steady-state (rate, distortion) pair. Diverged points are
/// flagged and the sweep continues. Hull flags are set on return.
std::vector<RDPoint> rd_sweep(const Problem& problem, const RunParams& base,
                              const MonteCarloOptions& mc, const RdGrid& grid);

/// Replaces the resolution parameter (delta or eta) of a quantizer spec.
/// Throws ConfigError when the operator has no resolution parameter.
void set_resolution(OperatorSpec& spec, double value);

/// Lower-left Pareto convex hull in the (rate, distortion-dB) plane,
/// sorted by rate. Collinear boundary points are retained.
std::vector<RDPoint> lower_convex_hull(const std::vector<RDPoint>& points);

/// Sets on_hull on the members of `points` found by lower_convex_hull.
void mark_hull(std::vector<RDPoint>& points);

}  // namespace defatc
