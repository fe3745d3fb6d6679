#include <doctest.h>

#include <cmath>
#include <cstring>
#include <thread>
#include <vector>

#include "dpro/parallel.hpp"
#include "dpro/rng.hpp"

using namespace dpro;

namespace {

std::vector<double> take_uniforms(RngStream s, int n) {
  std::vector<double> out(n);
  for (auto& v : out) v = s.next_uniform();
  return out;
}

}  // namespace

TEST_SUITE("rng") {

TEST_CASE("same (seed, substream) twice is byte-identical") {
  auto a = take_uniforms(derive_stream(42, 0), 1000);
  auto b = take_uniforms(derive_stream(42, 0), 1000);
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("distinct substreams diverge immediately") {
  auto a = derive_stream(42, 0);
  auto b = derive_stream(42, 1);
  CHECK(a.next_uniform() != b.next_uniform());
}

TEST_CASE("sequence is invariant to thread count") {
  auto reference = take_uniforms(derive_stream(42, 5), 256);
  std::vector<std::vector<double>> per_thread(8);
  std::vector<std::thread> pool;
  for (int w = 0; w < 8; ++w)
    pool.emplace_back([&per_thread, w] {
      per_thread[w] = take_uniforms(derive_stream(42, 5), 256);
    });
  for (auto& t : pool) t.join();
  for (const auto& seq : per_thread) CHECK(seq == reference);
}

TEST_CASE("child derivation ignores parent position") {
  auto parent = derive_stream(7, 3);
  auto fresh_child = parent.child(11);
  for (int i = 0; i < 100; ++i) parent.next_uniform();
  auto late_child = parent.child(11);
  CHECK(take_uniforms(fresh_child, 64) == take_uniforms(late_child, 64));
  CHECK(take_uniforms(parent.child(11), 8) != take_uniforms(parent.child(12), 8));
}

TEST_CASE("uniforms are strictly inside (0,1) with mean 1/2") {
  auto s = derive_stream(1, 0);
  const int n = 100000;
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    double u = s.next_uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  const double se = std::sqrt(1.0 / 12.0 / n);
  CHECK(std::abs(sum / n - 0.5) < 3 * se);
}

TEST_CASE("normal moments") {
  auto s = derive_stream(2, 0);
  const int n = 100000;
  double sum = 0, sumsq = 0;
  for (int i = 0; i < n; ++i) {
    double z = s.next_normal();
    sum += z;
    sumsq += z * z;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 3.0 / std::sqrt(n));
  CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("beta(1,eta): support, moments, parameter errors") {
  auto s = derive_stream(3, 0);
  const int n = 100000;

  double sum1 = 0, sum9 = 0;
  for (int i = 0; i < n; ++i) {
    double b1 = sample_beta_1_eta(s, 1.0);
    double b9 = sample_beta_1_eta(s, 9.0);
    REQUIRE(b1 >= 0.0);
    REQUIRE(b1 <= 1.0);
    REQUIRE(b9 >= 0.0);
    REQUIRE(b9 <= 1.0);
    sum1 += b1;
    sum9 += b9;
  }
  // Beta(1,1) is uniform; Beta(1,9) has mean 1/10 and var 9/(100*11).
  CHECK(std::abs(sum1 / n - 0.5) < 3 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(sum9 / n - 0.1) < 3 * std::sqrt(9.0 / (100.0 * 11.0) / n));

  CHECK_THROWS_AS(sample_beta_1_eta(s, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(sample_beta_1_eta(s, -2.0), std::invalid_argument);
}

TEST_CASE("gamma: moments at and above shape 1, sub-unit shapes valid") {
  auto s = derive_stream(4, 0);
  const int n = 100000;

  double sum1 = 0, sum26 = 0;
  for (int i = 0; i < n; ++i) {
    sum1 += sample_gamma(s, 1.0);
    sum26 += sample_gamma(s, 2.6);
  }
  CHECK(std::abs(sum1 / n - 1.0) < 3 * std::sqrt(1.0 / n));
  CHECK(std::abs(sum26 / n - 2.6) < 3 * std::sqrt(2.6 / n));

  // shape < 1 is the MDMC regime when T exceeds alpha + n.
  for (int i = 0; i < 20000; ++i) {
    double g = sample_gamma(s, 0.05);
    REQUIRE(g > 0.0);
    REQUIRE(std::isfinite(g));
  }

  CHECK_THROWS_AS(sample_gamma(s, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(sample_gamma(s, -1.0), std::invalid_argument);
}

TEST_CASE("symmetric dirichlet: simplex and componentwise mean") {
  auto s = derive_stream(5, 0);

  auto single = sample_dirichlet_symmetric(s, 1, 3.0);
  REQUIRE(single.size() == 1);
  CHECK(single[0] == doctest::Approx(1.0).epsilon(1e-12));

  const int draws = 10000, t = 50;
  const double conc = 2.0;  // (alpha + n)/T with alpha=0, n=100, T=50
  std::vector<double> comp_sum(t, 0.0);
  for (int i = 0; i < draws; ++i) {
    auto w = sample_dirichlet_symmetric(s, t, conc);
    double total = 0;
    for (int j = 0; j < t; ++j) {
      REQUIRE(w[j] >= 0.0);
      total += w[j];
      comp_sum[j] += w[j];
    }
    REQUIRE(std::abs(total - 1.0) <= 1e-12);
  }
  // Var of one component of Dirichlet(conc,...,conc): a(a0-a)/(a0^2 (a0+1)).
  const double a0 = conc * t;
  const double var = conc * (a0 - conc) / (a0 * a0 * (a0 + 1.0));
  const double se = std::sqrt(var / draws);
  for (int j : {0, 17, 49})
    CHECK(std::abs(comp_sum[j] / draws - 1.0 / t) < 3 * se);

  CHECK_THROWS_AS(sample_dirichlet_symmetric(s, 0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(sample_dirichlet_symmetric(s, 5, 0.0), std::invalid_argument);
}

TEST_CASE("compound symmetry normal: correlation and variance") {
  auto s = derive_stream(6, 0);
  const int n = 100000;

  SUBCASE("rho 0.3 gives pairwise correlation near 0.3 and unit variance") {
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
      auto v = sample_mvn_compound_symmetry(s, 2, 0.3);
      sx += v[0];
      sy += v[1];
      sxx += v[0] * v[0];
      syy += v[1] * v[1];
      sxy += v[0] * v[1];
    }
    const double mx = sx / n, my = sy / n;
    const double vx = sxx / n - mx * mx, vy = syy / n - my * my;
    const double corr = (sxy / n - mx * my) / std::sqrt(vx * vy);
    CHECK(corr > 0.27);
    CHECK(corr < 0.33);
    CHECK(std::abs(vx - 1.0) < 3 * std::sqrt(2.0 / n));
    CHECK(std::abs(vy - 1.0) < 3 * std::sqrt(2.0 / n));
  }

  SUBCASE("rho 0 is independent standard normals") {
    double sxy = 0, sx = 0, sy = 0;
    for (int i = 0; i < n; ++i) {
      auto v = sample_mvn_compound_symmetry(s, 3, 0.0);
      sx += v[0];
      sy += v[2];
      sxy += v[0] * v[2];
    }
    const double cov = sxy / n - (sx / n) * (sy / n);
    CHECK(std::abs(cov) < 3.0 / std::sqrt(n));
  }

  SUBCASE("parameter validation") {
    CHECK_THROWS_AS(sample_mvn_compound_symmetry(s, 2, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(sample_mvn_compound_symmetry(s, 2, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(sample_mvn_compound_symmetry(s, 0, 0.3), std::invalid_argument);
  }
}

TEST_CASE("pairwise_sum matches plain summation") {
  std::vector<double> x(1013);
  auto s = derive_stream(8, 0);
  long double ref = 0;
  for (auto& v : x) {
    v = s.next_normal();
    ref += v;
  }
  CHECK(pairwise_sum(x) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-12));
  CHECK(pairwise_sum(nullptr, 0) == 0.0);
}

}  // TEST_SUITE
