#pragma once

#include <cstdint>

#include "dpro/ambiguity.hpp"
#include "dpro/ensemble.hpp"

namespace dpro {

// Everything the robust criterion needs: an immutable posterior ensemble
// plus the loss family and ambiguity transform to run over it. The context
// only views the ensemble; keep the ensemble alive while the context is.
struct CriterionContext {
  const WeightedEnsemble* ensemble = nullptr;
  LossSpec loss;
  PhiSpec phi;

  CriterionContext() = default;
  CriterionContext(const WeightedEnsemble& ens, LossSpec l, PhiSpec p)
      : ensemble(&ens), loss(l), phi(p) {}
};

// H_i: the weighted loss of posterior sample i at theta.
double inner_risk(const CriterionContext& ctx, std::size_t sample_index, const Vec& theta);

// (1/N) sum_i phi(H_i(theta)). The N inner terms may be evaluated by several
// workers, but they land in an indexed buffer reduced by a fixed pairwise
// tree, so the value is bit-stable across thread counts.
double robust_value(const CriterionContext& ctx, const Vec& theta, int threads = 1);

// (1/N) sum_i phi'(H_i) sum_j p_ij grad_theta h(theta, xi_ij). Same
// deterministic reduction discipline as robust_value.
Vec robust_grad(const CriterionContext& ctx, const Vec& theta, int threads = 1);

// One sample's descent direction phi'(H_i) sum_j p_ij grad h — the SGD unit
// of work. Averaging it over all i reproduces robust_grad exactly; samples
// with larger H_i are scaled up by the increasing phi'.
Vec sample_direction(const CriterionContext& ctx, std::size_t sample_index, const Vec& theta);

struct NeutralOptions {
  int mc_draws = 10000;        // fallback budget when no analytic moment applies
  std::uint64_t seed = 0;      // stream identity for the fallback draws
  std::uint64_t substream = 0;
};

// The ambiguity-neutral criterion
//   n/(alpha+n) * empirical risk + alpha/(alpha+n) * E_p0[h(theta, .)],
// using analytic prior moments where the centering defines them:
//   normal product + squared loss        -> c (mean^2 + sd^2 + |theta|_2^2)
//   compound symmetry + squared loss     -> c (mean^2 + sd^2 + theta' Sigma theta)
//   normal response + location loss      -> c (sd^2 + (mean - theta)^2)
//   l1 variance rule + squared loss      -> c (1 + |theta|_1)
//   empirical centering                  -> empirical risk again
// Anything else falls back to seeded Monte Carlo with opts.mc_draws draws;
// mc_draws <= 0 then raises config_error.
double neutral_value(const Dataset& data, const DpPrior& prior, const LossSpec& loss,
                     const Vec& theta, const NeutralOptions& opts = {});

// Gradient of neutral_value. Analytic-moment centerings only (the l1 rule
// returns the sign subgradient, zero at kinks); others raise config_error.
Vec neutral_grad(const Dataset& data, const DpPrior& prior, const LossSpec& loss,
                 const Vec& theta);

// The regularization strength the neutral criterion induces: alpha / n.
double ridge_lambda(double alpha, std::size_t n);

}  // namespace dpro
