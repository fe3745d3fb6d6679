#include "dpro/criterion.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dpro/errors.hpp"
#include "dpro/parallel.hpp"

namespace dpro {

namespace {

void check_context(const CriterionContext& ctx) {
  if (ctx.ensemble == nullptr) {
    throw std::invalid_argument("criterion context has no ensemble attached");
  }
  if (ctx.ensemble->samples.empty()) {
    throw std::invalid_argument("criterion context ensemble has zero samples");
  }
}

// Weighted loss and (unscaled) weighted gradient of one posterior sample in a
// single pass over its atoms. Accumulation order is the stored atom order, so
// the result does not depend on who calls this.
double sample_risk_and_grad(const LossSpec& loss, const Vec& theta, const WeightedSample& sample,
                            Vec* grad_out) {
  double h = 0.0;
  for (std::size_t j = 0; j < sample.atoms.size(); ++j) {
    const double w = sample.weights[j];
    h += w * loss_eval(loss, theta, sample.atoms[j]);
    if (grad_out != nullptr) loss_grad_accum(loss, theta, sample.atoms[j], w, *grad_out);
  }
  return h;
}

double empirical_risk(const Dataset& data, const LossSpec& loss, const Vec& theta) {
  std::vector<double> terms(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) terms[i] = loss_eval(loss, theta, data.rows[i]);
  return pairwise_sum(terms) / static_cast<double>(data.size());
}

Vec empirical_grad(const Dataset& data, const LossSpec& loss, const Vec& theta) {
  Vec g = Vec::Zero(theta.size());
  const double inv_n = 1.0 / static_cast<double>(data.size());
  for (const Observation& obs : data.rows) loss_grad_accum(loss, theta, obs, inv_n, g);
  return g;
}

bool dims_match(const CenteringSpec& centering, const Vec& theta) {
  return centering.feature_dim == static_cast<int>(theta.size());
}

// Closed-form E_p0[h(theta, .)] where the centering/loss pairing admits one;
// empty optional means the caller has to integrate numerically.
std::optional<double> analytic_prior_risk(const CenteringSpec& centering, const LossSpec& loss,
                                          const Vec& theta, const Dataset& data) {
  const double m = centering.response_mean;
  const double s = centering.response_sd;
  switch (centering.kind) {
    case CenteringKind::standard_normal_product:
      if (loss.kind == LossKind::squared && dims_match(centering, theta)) {
        // residual ~ N(m, s^2 + |theta|^2)
        return loss.scale * (m * m + s * s + theta.squaredNorm());
      }
      if (loss.kind == LossKind::gaussian_location && centering.feature_dim == 0) {
        const double d = m - theta[0];
        return loss.scale * (s * s + d * d);
      }
      return std::nullopt;
    case CenteringKind::compound_symmetry_normal:
      if (loss.kind == LossKind::squared && dims_match(centering, theta)) {
        const double sum = theta.sum();
        const double quad = (1.0 - centering.rho) * theta.squaredNorm() + centering.rho * sum * sum;
        return loss.scale * (m * m + s * s + quad);
      }
      return std::nullopt;
    case CenteringKind::l1_variance_analytic:
      if (loss.kind == LossKind::squared) {
        return loss.scale * (1.0 + theta.lpNorm<1>());
      }
      return std::nullopt;
    case CenteringKind::point_mass_list: {
      if (centering.points.empty()) return std::nullopt;
      std::vector<double> terms(centering.points.size());
      for (std::size_t i = 0; i < terms.size(); ++i) {
        terms[i] = loss_eval(loss, theta, centering.points[i]);
      }
      return pairwise_sum(terms) / static_cast<double>(terms.size());
    }
    case CenteringKind::empirical:
      return empirical_risk(data, loss, theta);
    default:
      return std::nullopt;
  }
}

double monte_carlo_prior_risk(const CenteringSpec& centering, const LossSpec& loss,
                              const Vec& theta, const Dataset& data, const NeutralOptions& opts) {
  if (opts.mc_draws <= 0) {
    throw config_error(
        "no analytic prior moment for this centering/loss pairing and the Monte Carlo "
        "fallback is disabled (mc_draws <= 0)");
  }
  RngStream stream = derive_stream(opts.seed, opts.substream);
  std::vector<double> terms(static_cast<std::size_t>(opts.mc_draws));
  for (auto& t : terms) {
    const Observation draw = centering_draw(centering, data, stream);
    t = loss_eval(loss, theta, draw);
  }
  return pairwise_sum(terms) / static_cast<double>(terms.size());
}

}  // namespace

double inner_risk(const CriterionContext& ctx, std::size_t sample_index, const Vec& theta) {
  check_context(ctx);
  if (sample_index >= ctx.ensemble->samples.size()) {
    throw std::invalid_argument("inner_risk: sample index out of range");
  }
  return sample_risk_and_grad(ctx.loss, theta, ctx.ensemble->samples[sample_index], nullptr);
}

double robust_value(const CriterionContext& ctx, const Vec& theta, int threads) {
  check_context(ctx);
  const auto& samples = ctx.ensemble->samples;
  std::vector<double> terms(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    const double h = sample_risk_and_grad(ctx.loss, theta, samples[i], nullptr);
    try {
      terms[i] = phi(ctx.phi, h);
    } catch (const numeric_error& e) {
      throw numeric_error(std::string(e.what()) + " (posterior sample " + std::to_string(i) + ")");
    }
  });
  return pairwise_sum(terms) / static_cast<double>(samples.size());
}

Vec robust_grad(const CriterionContext& ctx, const Vec& theta, int threads) {
  check_context(ctx);
  const auto& samples = ctx.ensemble->samples;
  const std::size_t n_samples = samples.size();
  const auto dim = theta.size();
  // Row i holds sample i's scaled direction; columns are then contiguous, so
  // each coordinate reduces through the same pairwise tree regardless of how
  // many workers filled the rows.
  Eigen::MatrixXd directions(n_samples, dim);
  parallel_for(n_samples, threads, [&](std::size_t i) {
    Vec g = Vec::Zero(dim);
    const double h = sample_risk_and_grad(ctx.loss, theta, samples[i], &g);
    double scale = 1.0;
    try {
      scale = phi_prime(ctx.phi, h);
    } catch (const numeric_error& e) {
      throw numeric_error(std::string(e.what()) + " (posterior sample " + std::to_string(i) + ")");
    }
    directions.row(static_cast<Eigen::Index>(i)) = scale * g.transpose();
  });
  Vec out(dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    out[k] = pairwise_sum(directions.col(k).data(), n_samples) / static_cast<double>(n_samples);
  }
  return out;
}

Vec sample_direction(const CriterionContext& ctx, std::size_t sample_index, const Vec& theta) {
  check_context(ctx);
  if (sample_index >= ctx.ensemble->samples.size()) {
    throw std::invalid_argument("sample_direction: sample index out of range");
  }
  Vec g = Vec::Zero(theta.size());
  const double h = sample_risk_and_grad(ctx.loss, theta, ctx.ensemble->samples[sample_index], &g);
  g *= phi_prime(ctx.phi, h);
  return g;
}

double neutral_value(const Dataset& data, const DpPrior& prior, const LossSpec& loss,
                     const Vec& theta, const NeutralOptions& opts) {
  if (!(prior.alpha >= 0.0) || !std::isfinite(prior.alpha)) {
    throw std::invalid_argument("neutral_value: concentration must be finite and >= 0");
  }
  if (data.size() == 0) {
    throw std::invalid_argument("neutral_value: dataset is empty");
  }
  const double n = static_cast<double>(data.size());
  const double emp = empirical_risk(data, loss, theta);
  if (prior.alpha == 0.0) return emp;
  const double w_prior = prior.alpha / (prior.alpha + n);
  const std::optional<double> analytic =
      analytic_prior_risk(prior.centering, loss, theta, data);
  const double prior_risk =
      analytic ? *analytic : monte_carlo_prior_risk(prior.centering, loss, theta, data, opts);
  return (1.0 - w_prior) * emp + w_prior * prior_risk;
}

Vec neutral_grad(const Dataset& data, const DpPrior& prior, const LossSpec& loss,
                 const Vec& theta) {
  if (!(prior.alpha >= 0.0) || !std::isfinite(prior.alpha)) {
    throw std::invalid_argument("neutral_grad: concentration must be finite and >= 0");
  }
  if (data.size() == 0) {
    throw std::invalid_argument("neutral_grad: dataset is empty");
  }
  const double n = static_cast<double>(data.size());
  Vec emp = empirical_grad(data, loss, theta);
  if (prior.alpha == 0.0) return emp;
  const double w_prior = prior.alpha / (prior.alpha + n);

  const CenteringSpec& centering = prior.centering;
  Vec prior_g = Vec::Zero(theta.size());
  const double m = centering.response_mean;
  bool have_rule = false;
  switch (centering.kind) {
    case CenteringKind::standard_normal_product:
      if (loss.kind == LossKind::squared && dims_match(centering, theta)) {
        prior_g = 2.0 * loss.scale * theta;
        have_rule = true;
      } else if (loss.kind == LossKind::gaussian_location && centering.feature_dim == 0) {
        prior_g[0] = 2.0 * loss.scale * (theta[0] - m);
        have_rule = true;
      }
      break;
    case CenteringKind::compound_symmetry_normal:
      if (loss.kind == LossKind::squared && dims_match(centering, theta)) {
        prior_g = 2.0 * loss.scale *
                  ((1.0 - centering.rho) * theta +
                   centering.rho * theta.sum() * Vec::Ones(theta.size()));
        have_rule = true;
      }
      break;
    case CenteringKind::l1_variance_analytic:
      if (loss.kind == LossKind::squared) {
        // sign subgradient; zero on the kinks
        for (Eigen::Index k = 0; k < theta.size(); ++k) {
          prior_g[k] = loss.scale * (theta[k] > 0.0 ? 1.0 : (theta[k] < 0.0 ? -1.0 : 0.0));
        }
        have_rule = true;
      }
      break;
    case CenteringKind::point_mass_list:
      if (!centering.points.empty()) {
        const double inv = 1.0 / static_cast<double>(centering.points.size());
        for (const Observation& p : centering.points) loss_grad_accum(loss, theta, p, inv, prior_g);
        have_rule = true;
      }
      break;
    case CenteringKind::empirical:
      prior_g = emp;
      have_rule = true;
      break;
    default:
      break;
  }
  if (!have_rule) {
    throw config_error("neutral_grad: no analytic prior gradient for this centering/loss pairing");
  }
  return (1.0 - w_prior) * emp + w_prior * prior_g;
}

double ridge_lambda(double alpha, std::size_t n) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("ridge_lambda: concentration must be finite and >= 0");
  }
  if (n == 0) {
    throw std::invalid_argument("ridge_lambda: sample size must be positive");
  }
  return alpha / static_cast<double>(n);
}

}  // namespace dpro
