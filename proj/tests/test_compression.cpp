#include <doctest.h>

#include <cmath>

#include "defatc/compression.hpp"

using namespace defatc;

TEST_SUITE_BEGIN("compression");

namespace {

constexpr double kLog2Of3 = 1.5849625007211561814537389439478;

Eigen::VectorXd random_vector(int len, double scale, Rng& rng) {
  Eigen::VectorXd x(len);
  for (int j = 0; j < len; ++j) x[j] = scale * rng.gaussian();
  return x;
}

}  // namespace

TEST_CASE("dithered two-point law at x=0.3, delta=1") {
  Rng rng(11);
  int ups = 0;
  double mean = 0.0;
  const int trials = 100000;
  for (int t = 0; t < trials; ++t) {
    const auto [n, value] = dithered_uniform(0.3, 1.0, rng);
    REQUIRE((n == 0 || n == 1));
    ups += (n == 1);
    mean += value;
  }
  mean /= trials;
  // P(n=1) = 0.3 within five standard errors of a Bernoulli(0.3).
  const double se = std::sqrt(0.3 * 0.7 / trials);
  CHECK(std::abs(ups / double(trials) - 0.3) <= 5 * se);
  CHECK(std::abs(mean - 0.3) <= 5 * se);
}

TEST_CASE("dithered handles negative inputs through the floor") {
  Rng rng(12);
  double mean = 0.0;
  const int trials = 100000;
  for (int t = 0; t < trials; ++t) {
    const auto [n, value] = dithered_uniform(-0.3, 1.0, rng);
    REQUIRE((n == -1 || n == 0));
    mean += value;
  }
  CHECK(std::abs(mean / trials + 0.3) <= 5 * std::sqrt(0.21 / trials));
}

TEST_CASE("dithered lattice points are reproduced exactly") {
  Rng rng(13);
  for (int k : {-3, 0, 7}) {
    const auto [n, value] = dithered_uniform(k * 0.25, 0.25, rng);
    CHECK(n == k);
    CHECK(value == k * 0.25);
  }
}

TEST_CASE("anq maps zero to level zero with certainty") {
  Rng rng(14);
  for (int t = 0; t < 50; ++t) {
    const auto [n, value] = anq_quantize(0.0, 0.5, 1.0, rng);
    CHECK(n == 0);
    CHECK(value == 0.0);
  }
}

TEST_CASE("anq reproduction levels match the closed form") {
  // y_1 = (1/0.5) [ (0.5 + sqrt(1.25))^2 - 1 ] = 3.236068...
  CHECK(anq_level_value(1, 0.5, 1.0) ==
        doctest::Approx(3.2360679774997896).epsilon(1e-12));
  CHECK(anq_level_value(0, 0.5, 1.0) == 0.0);
  for (long long m : {1LL, 2LL, 5LL})
    CHECK(anq_level_value(-m, 0.5, 1.0) == -anq_level_value(m, 0.5, 1.0));
}

TEST_CASE("anq draws are conditionally unbiased") {
  Rng rng(15);
  for (double x : {0.4, -2.7, 11.0}) {
    double mean = 0.0, var = 0.0;
    const int trials = 200000;
    for (int t = 0; t < trials; ++t) {
      const double value = anq_quantize(x, 0.5, 0.3, rng).second;
      mean += value;
      var += (value - x) * (value - x);
    }
    mean /= trials;
    var /= trials;
    CHECK(std::abs(mean - x) <= 5 * std::sqrt(var / trials));
  }
}

TEST_CASE("anq with omega=0 is the dithered rule at step eta") {
  Rng a(77), b(77);
  for (double x : {0.0, 0.123, -4.56}) {
    const auto anq = anq_quantize(x, 0.0, 0.25, a);
    const auto dit = dithered_uniform(x, 0.25, b);
    CHECK(anq.first == dit.first);
    CHECK(anq.second == dit.second);
  }
}

TEST_CASE("identity charges the full-precision budget") {
  Rng rng(16);
  const Eigen::VectorXd x = random_vector(10, 1.0, rng);
  const CompressedMessage msg = compress(identity_op(32), x, rng);
  CHECK(msg.values == x);
  CHECK(msg.bits == 320.0);
}

TEST_CASE("zero vectors cost the minimum for variable-rate quantizers") {
  Rng rng(17);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(6);
  for (const OperatorSpec& spec : {dithered_op(0.5), anq_op(0.5, 0.2)}) {
    const CompressedMessage msg = compress(spec, zero, rng);
    CHECK(msg.values.cwiseAbs().maxCoeff() == 0.0);
    CHECK(msg.bits == doctest::Approx(6 * kLog2Of3).epsilon(1e-14));
  }
}

TEST_CASE("rand-c with c=L reproduces the input exactly") {
  Rng rng(18);
  const Eigen::VectorXd x = random_vector(7, 2.0, rng);
  for (bool unbiased : {false, true}) {
    const CompressedMessage msg = compress(rand_c_op(7, unbiased), x, rng);
    CHECK((msg.values - x).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("rand-c bit budget and declared parameters") {
  Rng rng(19);
  const Eigen::VectorXd x = random_vector(10, 1.0, rng);
  const CompressedMessage msg = compress(rand_c_op(4, false), x, rng);
  CHECK(msg.bits == 4 * 32 + 4 * 4);  // ceil(log2 10) = 4
  const DistortionParams params = declared_params(rand_c_op(4, false), 10);
  CHECK(params.beta_sq == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(params.sigma_sq == 0.0);
  CHECK_FALSE(params.unbiased);
  // The printed table entry alpha (1 - c/L) for the unbiased variant.
  CHECK(declared_params(rand_c_op(4, true), 10).beta_sq ==
        doctest::Approx(10.0 / 4.0 * 0.6).epsilon(1e-15));
}

TEST_CASE("gossip with q=1 always transmits at full budget") {
  Rng rng(20);
  const Eigen::VectorXd x = random_vector(5, 1.0, rng);
  for (int t = 0; t < 20; ++t) {
    const CompressedMessage msg = compress(gossip_op(1.0, false), x, rng);
    CHECK(msg.values == x);
    CHECK(msg.bits == 5 * 32);
  }
}

TEST_CASE("gossip transmits with the configured probability") {
  Rng rng(21);
  const Eigen::VectorXd x = random_vector(5, 1.0, rng);
  int sent = 0;
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    const CompressedMessage msg = compress(gossip_op(0.3, true), x, rng);
    if (msg.bits > 0) {
      ++sent;
      CHECK((msg.values - x / 0.3).cwiseAbs().maxCoeff() <= 1e-12);
    } else {
      CHECK(msg.values.cwiseAbs().maxCoeff() == 0.0);
    }
  }
  CHECK(std::abs(sent / double(trials) - 0.3) <=
        5 * std::sqrt(0.21 / trials));
}

TEST_CASE("qsgd declared relative noise for L=10, s=2") {
  const DistortionParams params = declared_params(qsgd_op(2), 10);
  CHECK(params.beta_sq ==
        doctest::Approx(std::sqrt(10.0) / 2.0).epsilon(1e-15));
  CHECK(params.unbiased);
}

TEST_CASE("qsgd bit budget and zero-vector handling") {
  Rng rng(22);
  const CompressedMessage zero =
      compress(qsgd_op(2), Eigen::VectorXd::Zero(10), rng);
  CHECK(zero.values.cwiseAbs().maxCoeff() == 0.0);
  CHECK(zero.bits == 32 + 10 + 10);
  const Eigen::VectorXd x = random_vector(10, 1.0, rng);
  CHECK(compress(qsgd_op(2), x, rng).bits == 52.0);
}

TEST_CASE("top-c keeps the largest magnitudes") {
  Rng rng(23);
  Eigen::VectorXd x(4);
  x << 3, -1, 4, 1;
  const CompressedMessage msg = compress(top_c_op(2), x, rng);
  Eigen::VectorXd expected(4);
  expected << 3, 0, 4, 0;
  CHECK(msg.values == expected);
}

TEST_CASE("top-c is deterministic and tie-breaks toward low indices") {
  Rng a(1), b(999);
  Eigen::VectorXd x(3);
  x << 1, 1, 1;
  const CompressedMessage first = compress(top_c_op(2), x, a);
  const CompressedMessage second = compress(top_c_op(2), x, b);
  CHECK(first.values == second.values);
  CHECK(first.values[0] == 1.0);
  CHECK(first.values[1] == 1.0);
  CHECK(first.values[2] == 0.0);
}

TEST_CASE("top-c energy identity holds exactly") {
  Rng rng(24);
  int violations = 0;
  for (int t = 0; t < 10000; ++t) {
    const int len = 2 + static_cast<int>(rng.below(12));
    const int c = 1 + static_cast<int>(rng.below(len));
    const Eigen::VectorXd x = random_vector(len, 1.0, rng);
    double kept = 0.0;
    for (int j : top_c_indices(x, c)) kept += x[j] * x[j];
    // Same left-to-right accumulation on both sides, so the c = len case
    // compares a sum against itself.
    double total = 0.0;
    for (int j = 0; j < len; ++j) total += x[j] * x[j];
    if (!(kept >= (static_cast<double>(c) / len) * total)) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("top-c quantizer composite parameters follow the composition law") {
  // Unbiased inner with beta_q^2 = 0: alpha = 1 and beta_c^2 = 1 - c/L.
  const OperatorSpec top4_dithered = top_c_quantizer_op(4, dithered_op(0.01));
  const DistortionParams params = declared_params(top4_dithered, 10);
  CHECK(params.beta_sq == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(params.sigma_sq ==
        doctest::Approx(10 * 0.01 * 0.01 / 4).epsilon(1e-15));
  // Biased inner with beta_q^2 = 0.5 (gossip, q = 0.5, biased).
  const DistortionParams biased =
      top_c_composite_params(4, 10, {0.5, 0.0, false});
  CHECK(biased.beta_sq == doctest::Approx(0.8).epsilon(1e-15));
  // Biased inners with beta_q^2 > 1 violate the composition precondition.
  CHECK_THROWS_AS(top_c_composite_params(4, 10, {1.5, 0.0, false}),
                  ConfigError);
}

TEST_CASE("top-c quantizer with identity inner is the plain sparsifier") {
  Rng rng(25);
  const Eigen::VectorXd x = random_vector(10, 1.0, rng);
  Rng a(5), b(5);
  const CompressedMessage composite =
      compress(top_c_quantizer_op(4, identity_op()), x, a);
  const CompressedMessage plain = compress(top_c_op(4), x, b);
  CHECK(composite.values == plain.values);
  CHECK(composite.bits == plain.bits);
  CHECK(plain.bits == 4 * 32 + 4 * 4);
}

TEST_CASE("top-c quantizer scales unbiased inners by 1/(1+beta_q^2)") {
  Rng rng(26);
  Eigen::VectorXd x(4);
  x << 10, -20, 30, 0.001;
  // ANQ inner with omega = 0.5: alpha = 1/1.5.
  const OperatorSpec spec = top_c_quantizer_op(3, anq_op(0.5, 1.0));
  double mean_scale = 0.0;
  const int trials = 40000;
  for (int t = 0; t < trials; ++t) {
    const CompressedMessage msg = compress(spec, x, rng);
    CHECK(msg.values[3] == 0.0);  // dropped coordinate stays zero
    mean_scale += msg.values[2];
  }
  // E[C(x)]_2 = alpha * x_2.
  CHECK(mean_scale / trials == doctest::Approx(30.0 / 1.5).epsilon(0.01));
}

TEST_CASE("variable-rate code lengths follow the per-level formula") {
  CHECK(variable_rate_bits({0}, 0) == doctest::Approx(kLog2Of3).epsilon(1e-14));
  CHECK(variable_rate_bits({3}, 0) ==
        doctest::Approx(3 * kLog2Of3).epsilon(1e-14));
  CHECK(variable_rate_bits({}, 6) ==
        doctest::Approx(6 * kLog2Of3).epsilon(1e-14));
  CHECK(variable_rate_bits({1}, 0) ==
        doctest::Approx(2 * kLog2Of3).epsilon(1e-14));
  CHECK(variable_rate_bits({-3}, 0) == variable_rate_bits({3}, 0));
}

TEST_CASE("variable-rate message bits match the levels term by term") {
  Rng rng(27);
  const Eigen::VectorXd x = random_vector(8, 5.0, rng);
  const CompressedMessage msg = compress(dithered_op(0.3), x, rng);
  REQUIRE(msg.levels.has_value());
  REQUIRE(msg.levels->size() == 8);
  double expected = 0.0;
  for (long long n : *msg.levels) {
    const double mag = static_cast<double>(n < 0 ? -n : n);
    expected += kLog2Of3 * (1.0 + std::ceil(std::log2(mag + 1.0)));
  }
  CHECK(msg.bits == doctest::Approx(expected).epsilon(1e-12));
  for (int j = 0; j < 8; ++j)
    CHECK(msg.values[j] == (*msg.levels)[j] * 0.3);
}

TEST_CASE("top-c variable-rate bits use the zeros encoding by default") {
  Rng rng(28);
  Eigen::VectorXd x(10);
  x.setZero();
  x[2] = 100.0;  // forces a non-zero level
  OperatorSpec spec = top_c_quantizer_op(4, dithered_op(1.0));
  const CompressedMessage msg = compress(spec, x, rng);
  // Nine zero levels at log2(3) each plus the coded level for x[2].
  const long long n2 = (*msg.levels)[2];
  const double expected =
      9 * kLog2Of3 +
      kLog2Of3 * (1.0 + std::ceil(std::log2(std::abs(n2) + 1.0)));
  CHECK(msg.bits == doctest::Approx(expected).epsilon(1e-12));

  // Location encoding replaces the zero symbols with c*ceil(log2 L) bits.
  spec.encode_locations = true;
  Rng rng2(28);
  const CompressedMessage located = compress(spec, x, rng2);
  const double kept =
      3 * kLog2Of3 +
      kLog2Of3 * (1.0 + std::ceil(std::log2(std::abs(n2) + 1.0)));
  CHECK(located.bits == doctest::Approx(kept + 4 * 4).epsilon(1e-12));
}

TEST_CASE("declared sigma for the dithered rule scales with L delta^2 / 4") {
  CHECK(declared_params(dithered_op(0.002), 10).sigma_sq ==
        doctest::Approx(1e-5).epsilon(1e-12));
  const DistortionParams anq = declared_params(anq_op(0.5, 0.1), 10);
  CHECK(anq.beta_sq == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(anq.sigma_sq == doctest::Approx(2 * 10 * 0.01).epsilon(1e-12));
}

TEST_CASE("invalid specs are rejected with config errors") {
  CHECK_THROWS_AS(validate_spec(dithered_op(0.0), 5), ConfigError);
  CHECK_THROWS_AS(validate_spec(rand_c_op(6, true), 5), ConfigError);
  CHECK_THROWS_AS(validate_spec(gossip_op(0.0, true), 5), ConfigError);
  CHECK_THROWS_AS(validate_spec(gossip_op(1.5, true), 5), ConfigError);
  CHECK_THROWS_AS(validate_spec(qsgd_op(0), 5), ConfigError);
  OperatorSpec anq = anq_op(-0.5, 1.0);
  CHECK_THROWS_AS(validate_spec(anq, 5), ConfigError);
}

TEST_CASE("non-finite inputs are rejected") {
  Rng rng(29);
  Eigen::VectorXd x(3);
  x << 1.0, std::nan(""), 2.0;
  CHECK_THROWS_AS(compress(identity_op(), x, rng), InputError);
}

TEST_CASE("distortion bounds hold empirically across the operator family") {
  Rng rng(30);
  const int len = 10;
  const std::vector<OperatorSpec> specs = {
      dithered_op(0.05),
      anq_op(0.5, 0.05),
      rand_c_op(4, false),
      rand_c_op(4, true),
      gossip_op(0.4, false),
      gossip_op(0.4, true),
      qsgd_op(2),
      top_c_op(4),
      top_c_quantizer_op(4, dithered_op(0.05)),
      top_c_quantizer_op(4, anq_op(0.5, 0.05)),
      top_c_quantizer_op(4, qsgd_op(2)),
  };
  for (const auto& spec : specs) {
    const DistortionParams params = declared_params(spec, len);
    for (double scale : {0.1, 1.0, 10.0}) {
      const Eigen::VectorXd x = random_vector(len, scale, rng);
      const double bound = params.beta_sq * x.squaredNorm() + params.sigma_sq;
      double mean = 0.0, second = 0.0;
      const int trials = 10000;
      for (int t = 0; t < trials; ++t) {
        const double err = (x - compress(spec, x, rng).values).squaredNorm();
        mean += err;
        second += err * err;
      }
      mean /= trials;
      const double var = std::max(0.0, second / trials - mean * mean);
      CHECK(mean <= bound + 5 * std::sqrt(var / trials));
    }
  }
}

TEST_SUITE_END();
