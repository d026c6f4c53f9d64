#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "defatc/errors.hpp"
#include "defatc/rng.hpp"

namespace defatc {

/// Declared compression-noise parameters: the conditional mean-square
/// error of the operator is bounded by beta_sq * |x|^2 + sigma_sq.
struct DistortionParams {
  double beta_sq = 0.0;
  double sigma_sq = 0.0;
  bool unbiased = false;
};

/// Result of one compression call: the reconstruction the receivers will
/// hold, the exact bit count charged for the transmission (real-valued:
/// variable-rate code lengths involve log2(3)), and, for variable-rate
/// quantizers, the integer level codes per component.
struct CompressedMessage {
  Eigen::VectorXd values;
  double bits = 0.0;
  std::optional<std::vector<long long>> levels;
};

enum class OperatorKind {
  Identity,
  DitheredUniform,
  Anq,
  RandC,
  Gossip,
  Qsgd,
  TopCSparsifier,
  TopCQuantizer,
};

std::string operator_kind_name(OperatorKind kind);

struct OperatorSpec {
  OperatorKind kind = OperatorKind::Identity;

  double delta = 0.0;  // dithered-uniform quantization step
  double omega = 0.0;  // ANQ shape
  double eta = 0.0;    // ANQ scale
  int c = 0;           // kept components (rand-c, top-c)
  double q = 1.0;      // gossip transmission probability
  int s = 1;           // QSGD quantization levels
  bool unbiased = true;  // variant flag for rand-c / gossip
  int b_hp = 32;         // bits for one high-precision scalar

  // When true, variable-rate top-c messages encode the kept locations
  // (c * ceil(log2 L) bits) instead of the zero components.
  bool encode_locations = false;

  std::shared_ptr<OperatorSpec> inner;  // top-c-quantizer only
};

// Convenience constructors for the common specs.
OperatorSpec identity_op(int b_hp = 32);
OperatorSpec dithered_op(double delta);
OperatorSpec anq_op(double omega, double eta);
OperatorSpec rand_c_op(int c, bool unbiased, int b_hp = 32);
OperatorSpec gossip_op(double q, bool unbiased, int b_hp = 32);
OperatorSpec qsgd_op(int s, int b_hp = 32);
OperatorSpec top_c_op(int c, int b_hp = 32);
OperatorSpec top_c_quantizer_op(int c, OperatorSpec inner);

/// Throws ConfigError when the spec is invalid for vectors of length L.
void validate_spec(const OperatorSpec& spec, int length);

/// Closed-form (beta_c^2, sigma_c^2) for vectors of length L.
DistortionParams declared_params(const OperatorSpec& spec, int length);

/// Distortion parameters of the top-c quantizer composition, given the
/// inner operator's declared parameters. Throws ConfigError for a biased
/// inner with beta_q^2 > 1.
DistortionParams top_c_composite_params(int c, int length,
                                        const DistortionParams& inner);

/// Applies the operator to x. Throws InputError on NaN/Inf input.
CompressedMessage compress(const OperatorSpec& spec, const Eigen::VectorXd& x,
                           Rng& rng);

/// One dithered-uniform draw: level n in {floor(x/delta), +1} with the
/// two-point law that makes n*delta conditionally unbiased.
std::pair<long long, double> dithered_uniform(double x, double delta,
                                              Rng& rng);

/// Reproduction value of ANQ level m (odd symmetric, exponentially
/// spaced away from zero).
double anq_level_value(long long m, double omega, double eta);

/// One ANQ draw: picks between the two reproduction levels bracketing x
/// so the output is conditionally unbiased. omega = 0 is routed to the
/// dithered-uniform rule with step eta.
std::pair<long long, double> anq_quantize(double x, double omega, double eta,
                                          Rng& rng);

/// Variable-rate code length: log2(3) * sum_j (1 + ceil(log2(|n_j|+1)))
/// plus one parsing symbol (log2 3 bits) per zero encoded outside the list.
double variable_rate_bits(const std::vector<long long>& levels,
                          int zeros_outside);

/// Indices of the c largest-magnitude components; ties broken toward the
/// lowest index. Returned sorted ascending.
std::vector<int> top_c_indices(const Eigen::VectorXd& x, int c);

}  // namespace defatc
