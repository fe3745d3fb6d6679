#include "dpro/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "dpro/errors.hpp"
#include "dpro/format.hpp"
#include "dpro/rng.hpp"

namespace dpro {

namespace {

void check_config(const SgdConfig& config) {
  if (!(config.step_a > 0.0) || !(config.step_b > 0.0)) {
    throw std::invalid_argument("step schedule constants must be positive");
  }
  if (config.passes < 1) throw std::invalid_argument("pass count must be at least 1");
  if (config.theta0.size() == 0) throw std::invalid_argument("initial point is empty");
  if (!(config.divergence_guard > 0.0)) {
    throw std::invalid_argument("divergence guard must be positive");
  }
}

// Shared run driver: `direction(t, theta)` supplies the update direction for
// update t, `per_pass` how many updates one pass holds. Both minimizers run
// through here so their trace bookkeeping (and the N = 1 case, where they
// coincide) stays identical.
template <typename DirectionFn>
RunTrace run_descent(const CriterionContext& ctx, const SgdConfig& config, long per_pass,
                     DirectionFn&& direction) {
  check_config(config);
  RunTrace trace;
  Vec theta = config.theta0;
  Vec avg_num = Vec::Zero(theta.size());
  double eta_sum = 0.0;
  long t = 0;

  auto abort_run = [&](const std::string& reason) {
    trace.aborted = true;
    trace.abort_reason = reason;
    trace.final_theta = theta;
    trace.averaged_theta = eta_sum > 0.0 ? Vec(avg_num / eta_sum) : theta;
    return trace;
  };
  auto record_boundary = [&]() {
    trace.criterion_values.push_back(robust_value(ctx, theta, config.threads));
    trace.theta_norms.push_back(theta.norm());
  };

  try {
    record_boundary();
  } catch (const numeric_error& e) {
    return abort_run(std::string("initial evaluation failed: ") + e.what());
  }

  for (int pass = 0; pass < config.passes; ++pass) {
    for (long k = 0; k < per_pass; ++k) {
      const double eta = eta_at(config, t);
      if (config.record_trace) trace.iterates.push_back(theta);
      avg_num += eta * theta;
      eta_sum += eta;
      Vec dir;
      try {
        dir = direction(t, theta);
      } catch (const numeric_error& e) {
        return abort_run(std::string("update ") + std::to_string(t) + " failed: " + e.what());
      }
      theta -= eta * dir;
      ++t;
      ++trace.updates;
      if (!theta.allFinite()) {
        return abort_run("update " + std::to_string(t - 1) + " produced a non-finite iterate");
      }
      if (theta.norm() > config.divergence_guard) {
        return abort_run("iterate norm exceeded the divergence guard after update " +
                         std::to_string(t - 1));
      }
    }
    try {
      record_boundary();
    } catch (const numeric_error& e) {
      return abort_run(std::string("evaluation after pass ") + std::to_string(pass) +
                       " failed: " + e.what());
    }
  }

  trace.final_theta = theta;
  trace.averaged_theta = eta_sum > 0.0 ? Vec(avg_num / eta_sum) : theta;
  return trace;
}

}  // namespace

double eta_at(const SgdConfig& config, long t) {
  return config.step_a / (config.step_b + std::sqrt(static_cast<double>(t)));
}

RunTrace sgd_minimize(const CriterionContext& ctx, const SgdConfig& config) {
  if (ctx.ensemble == nullptr || ctx.ensemble->samples.empty()) {
    throw std::invalid_argument("sgd_minimize: context has no posterior samples");
  }
  const std::size_t n_samples = ctx.ensemble->samples.size();
  std::vector<std::size_t> perm(n_samples);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  RngStream order_stream = derive_stream(config.seed, 0);
  std::size_t cursor = n_samples;  // forces a shuffle before the first visit
  return run_descent(ctx, config, static_cast<long>(n_samples),
                     [&](long /*t*/, const Vec& theta) {
                       if (cursor == n_samples) {
                         shuffle_indices(perm, order_stream);
                         cursor = 0;
                       }
                       return sample_direction(ctx, perm[cursor++], theta);
                     });
}

RunTrace full_gradient_descent(const CriterionContext& ctx, const SgdConfig& config) {
  if (ctx.ensemble == nullptr || ctx.ensemble->samples.empty()) {
    throw std::invalid_argument("full_gradient_descent: context has no posterior samples");
  }
  return run_descent(ctx, config, 1, [&](long /*t*/, const Vec& theta) {
    return robust_grad(ctx, theta, config.threads);
  });
}

Vec minibatch_sgd_step(const CriterionContext& ctx, const Vec& theta,
                       const std::vector<std::size_t>& batch_indices, double eta) {
  if (ctx.ensemble == nullptr || ctx.ensemble->samples.empty()) {
    throw std::invalid_argument("minibatch_sgd_step: context has no posterior samples");
  }
  if (batch_indices.empty()) throw std::invalid_argument("minibatch_sgd_step: empty batch");
  const auto& samples = ctx.ensemble->samples;

  // flattened term m lives in sample i iff offsets[i] <= m < offsets[i+1]
  std::vector<std::size_t> offsets(samples.size() + 1, 0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    offsets[i + 1] = offsets[i] + samples[i].atoms.size();
  }
  const std::size_t total_terms = offsets.back();
  const double terms_per_sample =
      static_cast<double>(total_terms) / static_cast<double>(samples.size());

  Vec dir = Vec::Zero(theta.size());
  std::size_t sample_of = 0;
  double h_cache = 0.0;
  bool have_h = false;
  for (const std::size_t m : batch_indices) {
    if (m >= total_terms) {
      throw std::invalid_argument("minibatch_sgd_step: term index out of range");
    }
    // batches are typically drawn sample-major; reuse H_i while m stays inside
    // the same sample
    if (!have_h || m < offsets[sample_of] || m >= offsets[sample_of + 1]) {
      sample_of = static_cast<std::size_t>(
          std::upper_bound(offsets.begin(), offsets.end(), m) - offsets.begin() - 1);
      h_cache = inner_risk(ctx, sample_of, theta);
      have_h = true;
    }
    const std::size_t j = m - offsets[sample_of];
    const WeightedSample& sample = samples[sample_of];
    const double scale = terms_per_sample * sample.weights[j] * phi_prime(ctx.phi, h_cache) /
                         static_cast<double>(batch_indices.size());
    loss_grad_accum(ctx.loss, theta, sample.atoms[j], scale, dir);
  }
  return theta - eta * dir;
}

Vec averaged_iterate(const RunTrace& trace, const std::vector<double>& schedule) {
  if (trace.iterates.empty()) {
    throw std::invalid_argument("averaged_iterate: trace has no recorded iterates");
  }
  if (schedule.size() != trace.iterates.size()) {
    throw std::invalid_argument("averaged_iterate: schedule length does not match iterates");
  }
  Vec num = Vec::Zero(trace.iterates.front().size());
  double den = 0.0;
  for (std::size_t t = 0; t < schedule.size(); ++t) {
    if (!(schedule[t] > 0.0)) {
      throw std::invalid_argument("averaged_iterate: schedule entries must be positive");
    }
    num += schedule[t] * trace.iterates[t];
    den += schedule[t];
  }
  return num / den;
}

void write_trace_csv(const std::string& path, const RunTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open trace output file: " + path);
  out << "pass,criterion,theta_norm\n";
  for (std::size_t p = 0; p < trace.criterion_values.size(); ++p) {
    out << p << ',' << format_double(trace.criterion_values[p]) << ','
        << format_double(trace.theta_norms[p]) << '\n';
  }
  if (!out.good()) throw data_error("failed writing trace output file: " + path);
}

}  // namespace dpro
