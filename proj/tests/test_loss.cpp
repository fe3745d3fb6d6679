#include <doctest.h>

#include <cmath>
#include <limits>

#include "dpro/loss.hpp"
#include "dpro/rng.hpp"

using namespace dpro;

namespace {

Vec to_vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

LossSpec spec_of(LossKind k, double c = 1.0) { return LossSpec{k, c, std::nullopt}; }

// Random instance for a given kind: theta and observation, dim d.
struct Instance {
  Vec theta;
  Observation obs;
};

Instance random_instance(LossKind kind, RngStream& s, int d) {
  Instance inst;
  if (kind == LossKind::gaussian_location) {
    inst.theta = to_vec({s.next_normal()});
    inst.obs.response = 3.0 * s.next_normal();
  } else {
    inst.theta = Vec::NullaryExpr(d, [&](Eigen::Index) { return s.next_normal(); });
    inst.obs.features = Vec::NullaryExpr(d, [&](Eigen::Index) { return s.next_normal(); });
    inst.obs.response =
        kind == LossKind::logistic ? (s.next_uniform() < 0.5 ? -1.0 : 1.0) : 2.0 * s.next_normal();
  }
  return inst;
}

double fd_gradient(const LossSpec& spec, const Vec& theta, const Observation& obs, int j,
                   double h = 1e-6) {
  Vec up = theta, dn = theta;
  up[j] += h;
  dn[j] -= h;
  return (loss_eval(spec, up, obs) - loss_eval(spec, dn, obs)) / (2 * h);
}

}  // namespace

TEST_SUITE("loss") {

TEST_CASE("hand values") {
  Observation fit{to_vec({2, 3}), 2.0};
  CHECK(loss_eval(spec_of(LossKind::squared), to_vec({1, 0}), fit) == 0.0);

  Observation any{to_vec({4, -7}), 1.0};
  CHECK(loss_eval(spec_of(LossKind::logistic), to_vec({0, 0}), any) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-14));

  Observation xi{Vec(), 5.0};
  CHECK(loss_eval(spec_of(LossKind::gaussian_location, 1e-3), to_vec({0}), xi) ==
        doctest::Approx(0.025).epsilon(1e-14));
}

TEST_CASE("hand gradients") {
  Observation fit{to_vec({2, 3}), 2.0};
  Vec g = loss_grad(spec_of(LossKind::squared), to_vec({1, 0}), fit);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == 0.0);

  Observation pos{to_vec({1, 1}), 1.0};
  Vec gl = loss_grad(spec_of(LossKind::logistic), to_vec({0, 0}), pos);
  CHECK(gl[0] == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(gl[1] == doctest::Approx(-0.5).epsilon(1e-14));
}

TEST_CASE("gradient matches central finite differences on random instances") {
  auto s = derive_stream(11, 0);
  const LossKind kinds[] = {LossKind::squared, LossKind::logistic, LossKind::gaussian_location};
  for (int rep = 0; rep < 100; ++rep) {
    const LossKind kind = kinds[rep % 3];
    const auto spec = spec_of(kind, rep % 2 ? 1.0 : 1e-3);
    auto inst = random_instance(kind, s, 4);
    Vec g = loss_grad(spec, inst.theta, inst.obs);
    for (int j = 0; j < inst.theta.size(); ++j) {
      const double fd = fd_gradient(spec, inst.theta, inst.obs, j);
      const double scale = std::max({1e-8, std::abs(fd), std::abs(g[j])});
      CHECK(std::abs(g[j] - fd) / scale < 1e-5);
    }
  }
}

TEST_CASE("nonnegativity and convexity on random instances") {
  auto s = derive_stream(12, 0);
  const LossKind kinds[] = {LossKind::squared, LossKind::logistic, LossKind::gaussian_location};
  for (int rep = 0; rep < 100; ++rep) {
    const LossKind kind = kinds[rep % 3];
    const auto spec = spec_of(kind);
    auto a = random_instance(kind, s, 5);
    auto b = random_instance(kind, s, 5);
    b.obs = a.obs;  // same point, two parameter vectors
    const double lam = s.next_uniform();
    const Vec mix = lam * a.theta + (1 - lam) * b.theta;
    const double lhs = loss_eval(spec, mix, a.obs);
    const double rhs = lam * loss_eval(spec, a.theta, a.obs) + (1 - lam) * loss_eval(spec, b.theta, a.obs);
    CHECK(lhs >= 0.0);
    CHECK(lhs <= rhs + 1e-12);
  }
}

TEST_CASE("scale is exactly multiplicative") {
  auto s = derive_stream(13, 0);
  for (LossKind kind : {LossKind::squared, LossKind::logistic, LossKind::gaussian_location}) {
    auto inst = random_instance(kind, s, 3);
    const double c = 1e-3;
    CHECK(loss_eval(spec_of(kind, c), inst.theta, inst.obs) ==
          c * loss_eval(spec_of(kind, 1.0), inst.theta, inst.obs));
  }
}

TEST_CASE("logistic stays finite at extreme margins") {
  Observation obs{to_vec({1.0}), 1.0};
  const auto spec = spec_of(LossKind::logistic);
  const double big = loss_eval(spec, to_vec({-1000.0}), obs);
  CHECK(std::isfinite(big));
  CHECK(big == doctest::Approx(1000.0).epsilon(1e-12));
  const double tiny = loss_eval(spec, to_vec({1000.0}), obs);
  CHECK(tiny >= 0.0);
  CHECK(tiny < 1e-300);
  Vec g = loss_grad(spec, to_vec({-1000.0}), obs);
  CHECK(std::isfinite(g[0]));
}

TEST_CASE("shape and input validation") {
  const auto sq = spec_of(LossKind::squared);
  Observation obs{to_vec({1, 2}), 1.0};
  CHECK_THROWS_AS(loss_eval(sq, to_vec({1, 2, 3}), obs), std::invalid_argument);
  CHECK_THROWS_AS(loss_grad(sq, to_vec({1}), obs), std::invalid_argument);

  Observation nan_obs{to_vec({1, std::numeric_limits<double>::quiet_NaN()}), 1.0};
  CHECK_THROWS_AS(loss_eval(sq, to_vec({1, 2}), nan_obs), std::invalid_argument);
  Observation inf_resp{to_vec({1, 2}), std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(loss_eval(sq, to_vec({1, 2}), inf_resp), std::invalid_argument);

  const auto loc = spec_of(LossKind::gaussian_location);
  Observation with_feats{to_vec({1}), 0.5};
  CHECK_THROWS_AS(loss_eval(loc, to_vec({0}), with_feats), std::invalid_argument);
  Observation bare{Vec(), 0.5};
  CHECK_THROWS_AS(loss_eval(loc, to_vec({0, 0}), bare), std::invalid_argument);
}

TEST_CASE("bound_k is diagnostic only") {
  LossSpec spec{LossKind::squared, 1.0, 4.0};
  Observation obs{to_vec({1.0}), 10.0};
  const double v = loss_eval(spec, to_vec({0.0}), obs);
  CHECK(v == 100.0);  // never clipped
  CHECK_FALSE(within_bound(spec, v));
  CHECK(within_bound(spec, 3.9));
  CHECK(within_bound(LossSpec{LossKind::squared, 1.0, std::nullopt}, 1e12));
}

TEST_CASE("grad accumulation adds coeff times gradient") {
  auto s = derive_stream(14, 0);
  auto inst = random_instance(LossKind::squared, s, 6);
  const auto spec = spec_of(LossKind::squared, 0.5);
  Vec acc = Vec::Ones(6);
  loss_grad_accum(spec, inst.theta, inst.obs, -2.5, acc);
  Vec expect = Vec::Ones(6) - 2.5 * loss_grad(spec, inst.theta, inst.obs);
  CHECK((acc - expect).lpNorm<Eigen::Infinity>() < 1e-14);
}

}  // TEST_SUITE
