#include "defatc/compression.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace defatc {

namespace {

constexpr double kLog2Of3 = 1.5849625007211561814537389439478;  // log2(3)

// ceil(log2(v)) for v >= 1.
int ceil_log2(unsigned long long v) {
  if (v <= 1) return 0;
  return std::bit_width(v - 1);
}

double sign(double x) { return (x > 0.0) - (x < 0.0); }

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

std::string operator_kind_name(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::Identity: return "identity";
    case OperatorKind::DitheredUniform: return "dithered-uniform";
    case OperatorKind::Anq: return "anq";
    case OperatorKind::RandC: return "rand-c";
    case OperatorKind::Gossip: return "gossip";
    case OperatorKind::Qsgd: return "qsgd";
    case OperatorKind::TopCSparsifier: return "top-c-sparsifier";
    case OperatorKind::TopCQuantizer: return "top-c-quantizer";
  }
  return "unknown";
}

OperatorSpec identity_op(int b_hp) {
  OperatorSpec spec;
  spec.kind = OperatorKind::Identity;
  spec.b_hp = b_hp;
  return spec;
}

OperatorSpec dithered_op(double delta) {
  OperatorSpec spec;
  spec.kind = OperatorKind::DitheredUniform;
  spec.delta = delta;
  return spec;
}

OperatorSpec anq_op(double omega, double eta) {
  OperatorSpec spec;
  spec.kind = OperatorKind::Anq;
  spec.omega = omega;
  spec.eta = eta;
  return spec;
}

OperatorSpec rand_c_op(int c, bool unbiased, int b_hp) {
  OperatorSpec spec;
  spec.kind = OperatorKind::RandC;
  spec.c = c;
  spec.unbiased = unbiased;
  spec.b_hp = b_hp;
  return spec;
}

OperatorSpec gossip_op(double q, bool unbiased, int b_hp) {
  OperatorSpec spec;
  spec.kind = OperatorKind::Gossip;
  spec.q = q;
  spec.unbiased = unbiased;
  spec.b_hp = b_hp;
  return spec;
}

OperatorSpec qsgd_op(int s, int b_hp) {
  OperatorSpec spec;
  spec.kind = OperatorKind::Qsgd;
  spec.s = s;
  spec.b_hp = b_hp;
  return spec;
}

OperatorSpec top_c_op(int c, int b_hp) {
  OperatorSpec spec;
  spec.kind = OperatorKind::TopCSparsifier;
  spec.c = c;
  spec.b_hp = b_hp;
  return spec;
}

OperatorSpec top_c_quantizer_op(int c, OperatorSpec inner) {
  OperatorSpec spec;
  spec.kind = OperatorKind::TopCQuantizer;
  spec.c = c;
  spec.b_hp = inner.b_hp;
  spec.inner = std::make_shared<OperatorSpec>(std::move(inner));
  return spec;
}

void validate_spec(const OperatorSpec& spec, int length) {
  require(length >= 1, "operator: vector length must be positive");
  require(spec.b_hp >= 1, "operator: B_HP must be >= 1");
  switch (spec.kind) {
    case OperatorKind::Identity:
      break;
    case OperatorKind::DitheredUniform:
      require(std::isfinite(spec.delta) && spec.delta > 0.0,
              "dithered-uniform: delta must be positive");
      break;
    case OperatorKind::Anq:
      require(std::isfinite(spec.omega) && spec.omega >= 0.0,
              "anq: omega must be non-negative");
      require(std::isfinite(spec.eta) && spec.eta > 0.0,
              "anq: eta must be positive");
      break;
    case OperatorKind::RandC:
    case OperatorKind::TopCSparsifier:
      require(spec.c >= 1 && spec.c <= length,
              operator_kind_name(spec.kind) + ": c must be in [1, " +
                  std::to_string(length) + "], got " + std::to_string(spec.c));
      break;
    case OperatorKind::Gossip:
      require(std::isfinite(spec.q) && spec.q > 0.0 && spec.q <= 1.0,
              "gossip: q must be in (0, 1]");
      break;
    case OperatorKind::Qsgd:
      require(spec.s >= 1, "qsgd: s must be >= 1");
      break;
    case OperatorKind::TopCQuantizer: {
      require(spec.c >= 1 && spec.c <= length,
              "top-c-quantizer: c must be in [1, " + std::to_string(length) +
                  "], got " + std::to_string(spec.c));
      require(spec.inner != nullptr, "top-c-quantizer: inner operator missing");
      validate_spec(*spec.inner, length);
      // Triggers the biased beta_q^2 > 1 precondition check.
      top_c_composite_params(spec.c, length,
                             declared_params(*spec.inner, length));
      break;
    }
  }
}

DistortionParams top_c_composite_params(int c, int length,
                                        const DistortionParams& inner) {
  require(c >= 1 && c <= length, "top-c-quantizer: c out of range");
  if (!inner.unbiased && inner.beta_sq > 1.0)
    throw ConfigError(
        "top-c-quantizer: a biased inner operator requires beta_q^2 <= 1, got " +
        std::to_string(inner.beta_sq));
  const double alpha = inner.unbiased ? 1.0 / (1.0 + inner.beta_sq) : 1.0;
  const double keep = static_cast<double>(c) / length;
  DistortionParams out;
  out.beta_sq =
      1.0 - keep * (1.0 - ((1.0 - alpha) * (1.0 - alpha) +
                           alpha * alpha * inner.beta_sq));
  out.sigma_sq = alpha * alpha * inner.sigma_sq;
  out.unbiased = inner.unbiased && alpha == 1.0 && c == length;
  return out;
}

DistortionParams declared_params(const OperatorSpec& spec, int length) {
  const double len = static_cast<double>(length);
  switch (spec.kind) {
    case OperatorKind::Identity:
      return {0.0, 0.0, true};
    case OperatorKind::DitheredUniform:
      return {0.0, len * spec.delta * spec.delta / 4.0, true};
    case OperatorKind::Anq:
      return {2.0 * spec.omega * spec.omega, 2.0 * len * spec.eta * spec.eta,
              true};
    case OperatorKind::RandC: {
      const double alpha = spec.unbiased ? len / spec.c : 1.0;
      return {alpha * (1.0 - spec.c / len), 0.0, spec.unbiased};
    }
    case OperatorKind::Gossip: {
      const double alpha = spec.unbiased ? 1.0 / spec.q : 1.0;
      return {alpha * (1.0 - spec.q), 0.0, spec.unbiased};
    }
    case OperatorKind::Qsgd: {
      const double s = static_cast<double>(spec.s);
      return {std::min(len / (s * s), std::sqrt(len) / s), 0.0, true};
    }
    case OperatorKind::TopCSparsifier:
      return {1.0 - spec.c / len, 0.0, false};
    case OperatorKind::TopCQuantizer:
      return top_c_composite_params(spec.c, length,
                                    declared_params(*spec.inner, length));
  }
  throw ConfigError("unknown operator kind");
}

std::pair<long long, double> dithered_uniform(double x, double delta,
                                              Rng& rng) {
  const double t = x / delta;
  long long m = static_cast<long long>(std::floor(t));
  const double p_up = t - static_cast<double>(m);
  const long long n = m + (rng.uniform() < p_up ? 1 : 0);
  return {n, static_cast<double>(n) * delta};
}

double anq_level_value(long long m, double omega, double eta) {
  if (m == 0) return 0.0;
  const double growth = omega + std::sqrt(1.0 + omega * omega);
  const double mag =
      (eta / omega) *
      (std::pow(growth, 2.0 * static_cast<double>(std::llabs(m))) - 1.0);
  return m > 0 ? mag : -mag;
}

std::pair<long long, double> anq_quantize(double x, double omega, double eta,
                                          Rng& rng) {
  if (omega == 0.0) return dithered_uniform(x, eta, rng);
  const double growth = omega + std::sqrt(1.0 + omega * omega);
  long long m = static_cast<long long>(std::floor(
      sign(x) * std::log1p((omega / eta) * std::abs(x)) /
      (2.0 * std::log(growth))));
  // Rounding in the closed-form index can land one level off; restore
  // the bracket y_m <= x <= y_{m+1}.
  while (x < anq_level_value(m, omega, eta)) --m;
  while (x > anq_level_value(m + 1, omega, eta)) ++m;
  const double lo = anq_level_value(m, omega, eta);
  const double hi = anq_level_value(m + 1, omega, eta);
  const double p_up = (x - lo) / (hi - lo);
  const long long n = m + (rng.uniform() < p_up ? 1 : 0);
  return {n, n == m ? lo : hi};
}

double variable_rate_bits(const std::vector<long long>& levels,
                          int zeros_outside) {
  require(zeros_outside >= 0, "variable_rate_bits: negative zero count");
  long long symbols = zeros_outside;
  for (long long n : levels) {
    const unsigned long long mag =
        static_cast<unsigned long long>(n < 0 ? -n : n);
    symbols += 1 + ceil_log2(mag + 1);
  }
  return kLog2Of3 * static_cast<double>(symbols);
}

std::vector<int> top_c_indices(const Eigen::VectorXd& x, int c) {
  const int len = static_cast<int>(x.size());
  std::vector<int> order(len);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + c, order.end(),
                    [&x](int a, int b) {
                      const double ma = std::abs(x[a]), mb = std::abs(x[b]);
                      if (ma != mb) return ma > mb;
                      return a < b;
                    });
  order.resize(c);
  std::sort(order.begin(), order.end());
  return order;
}

namespace {

CompressedMessage compress_quantizer_componentwise(const OperatorSpec& spec,
                                                   const Eigen::VectorXd& x,
                                                   Rng& rng) {
  const int len = static_cast<int>(x.size());
  CompressedMessage msg;
  msg.values.resize(len);
  msg.levels.emplace(len);
  for (int j = 0; j < len; ++j) {
    const auto [n, value] =
        spec.kind == OperatorKind::DitheredUniform
            ? dithered_uniform(x[j], spec.delta, rng)
            : anq_quantize(x[j], spec.omega, spec.eta, rng);
    (*msg.levels)[j] = n;
    msg.values[j] = value;
  }
  msg.bits = variable_rate_bits(*msg.levels, 0);
  return msg;
}

CompressedMessage compress_rand_c(const OperatorSpec& spec,
                                  const Eigen::VectorXd& x, Rng& rng) {
  const int len = static_cast<int>(x.size());
  std::vector<int> pool(len);
  std::iota(pool.begin(), pool.end(), 0);
  // Partial Fisher-Yates draws c distinct coordinates.
  for (int i = 0; i < spec.c; ++i) {
    const int j = i + static_cast<int>(rng.below(len - i));
    std::swap(pool[i], pool[j]);
  }
  const double alpha = spec.unbiased ? static_cast<double>(len) / spec.c : 1.0;
  CompressedMessage msg;
  msg.values = Eigen::VectorXd::Zero(len);
  for (int i = 0; i < spec.c; ++i) msg.values[pool[i]] = alpha * x[pool[i]];
  msg.bits = static_cast<double>(spec.c) * spec.b_hp +
             static_cast<double>(spec.c) * ceil_log2(len);
  return msg;
}

CompressedMessage compress_qsgd(const OperatorSpec& spec,
                                const Eigen::VectorXd& x, Rng& rng) {
  const int len = static_cast<int>(x.size());
  const double norm = x.norm();
  CompressedMessage msg;
  msg.values = Eigen::VectorXd::Zero(len);
  if (norm > 0.0) {
    for (int j = 0; j < len; ++j) {
      const double t = spec.s * std::abs(x[j]) / norm;
      const long long m = static_cast<long long>(std::floor(t));
      const double p_up = t - static_cast<double>(m);
      const long long n = m + (rng.uniform() < p_up ? 1 : 0);
      msg.values[j] = norm * sign(x[j]) * static_cast<double>(n) / spec.s;
    }
  }
  msg.bits = static_cast<double>(spec.b_hp) + len +
             static_cast<double>(len) * ceil_log2(spec.s);
  return msg;
}

CompressedMessage compress_top_c_quantizer(const OperatorSpec& spec,
                                           const Eigen::VectorXd& x,
                                           Rng& rng) {
  const int len = static_cast<int>(x.size());
  const std::vector<int> kept = top_c_indices(x, spec.c);
  Eigen::VectorXd sparse = Eigen::VectorXd::Zero(len);
  for (int j : kept) sparse[j] = x[j];

  const OperatorSpec& inner = *spec.inner;
  CompressedMessage msg;
  switch (inner.kind) {
    case OperatorKind::Identity:
      // Plain top-c sparsifier: the kept values travel at high precision.
      msg.values = sparse;
      msg.bits = static_cast<double>(spec.c) * inner.b_hp +
                 static_cast<double>(spec.c) * ceil_log2(len);
      break;
    case OperatorKind::DitheredUniform:
    case OperatorKind::Anq: {
      msg = compress_quantizer_componentwise(inner, sparse, rng);
      if (spec.encode_locations) {
        std::vector<long long> kept_levels;
        kept_levels.reserve(kept.size());
        for (int j : kept) kept_levels.push_back((*msg.levels)[j]);
        msg.bits = variable_rate_bits(kept_levels, 0) +
                   static_cast<double>(spec.c) * ceil_log2(len);
      }
      break;
    }
    default:
      msg = compress(inner, sparse, rng);
      break;
  }

  const DistortionParams inner_params = declared_params(inner, len);
  const double alpha =
      inner_params.unbiased ? 1.0 / (1.0 + inner_params.beta_sq) : 1.0;
  if (alpha != 1.0) msg.values *= alpha;
  return msg;
}

}  // namespace

CompressedMessage compress(const OperatorSpec& spec, const Eigen::VectorXd& x,
                           Rng& rng) {
  if (!x.allFinite())
    throw InputError("compress: input contains NaN or Inf");
  const int len = static_cast<int>(x.size());
  validate_spec(spec, len);

  switch (spec.kind) {
    case OperatorKind::Identity: {
      CompressedMessage msg;
      msg.values = x;
      msg.bits = static_cast<double>(len) * spec.b_hp;
      return msg;
    }
    case OperatorKind::DitheredUniform:
    case OperatorKind::Anq:
      return compress_quantizer_componentwise(spec, x, rng);
    case OperatorKind::RandC:
      return compress_rand_c(spec, x, rng);
    case OperatorKind::Gossip: {
      CompressedMessage msg;
      if (rng.uniform() < spec.q) {
        const double alpha = spec.unbiased ? 1.0 / spec.q : 1.0;
        msg.values = alpha * x;
        msg.bits = static_cast<double>(len) * spec.b_hp;
      } else {
        msg.values = Eigen::VectorXd::Zero(len);
        msg.bits = 0.0;
      }
      return msg;
    }
    case OperatorKind::Qsgd:
      return compress_qsgd(spec, x, rng);
    case OperatorKind::TopCSparsifier: {
      CompressedMessage msg;
      msg.values = Eigen::VectorXd::Zero(len);
      for (int j : top_c_indices(x, spec.c)) msg.values[j] = x[j];
      msg.bits = static_cast<double>(spec.c) * spec.b_hp +
                 static_cast<double>(spec.c) * ceil_log2(len);
      return msg;
    }
    case OperatorKind::TopCQuantizer:
      return compress_top_c_quantizer(spec, x, rng);
  }
  throw ConfigError("unknown operator kind");
}

}  // namespace defatc
