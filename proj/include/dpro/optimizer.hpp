#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpro/criterion.hpp"

namespace dpro {

// Schedule and run-shape knobs for the stochastic minimizers. The step at
// update t (counted from 0 across all passes) is step_a / (step_b + sqrt(t)).
struct SgdConfig {
  double step_a = 50.0;
  double step_b = 100.0;
  int passes = 1;           // each pass visits every posterior sample once
  Vec theta0;
  std::uint64_t seed = 0;   // drives the per-pass visiting order only
  bool record_trace = false;  // keep every pre-update iterate in the trace
  int threads = 1;            // workers for the pass-boundary evaluations
  double divergence_guard = 1e6;  // abort once |theta| exceeds this
};

struct RunTrace {
  // pre-update iterates theta^t, t = 0..updates-1 (only when record_trace)
  std::vector<Vec> iterates;
  // robust value at pass boundaries: initial point plus one entry per
  // completed pass
  std::vector<double> criterion_values;
  std::vector<double> theta_norms;  // |theta| at the same boundaries
  Vec final_theta;
  // step-weighted running average of the pre-update iterates,
  // sum_t eta_t theta^t / sum_t eta_t
  Vec averaged_theta;
  long updates = 0;
  bool aborted = false;
  std::string abort_reason;
};

double eta_at(const SgdConfig& config, long t);

// The per-sample stochastic minimizer: P passes, each visiting all N
// posterior samples once in a fresh uniformly random order, updating
//   theta <- theta - eta_t * phi'(H_i) sum_j p_ij grad h(theta, xi_ij).
// A step cap-hit or a divergence-guard trip ends the run early with
// aborted = true and the trace collected so far.
RunTrace sgd_minimize(const CriterionContext& ctx, const SgdConfig& config);

// One mini-batch update over flattened (sample, atom) term indices; term m
// carries weight (terms/N) * p_m, which makes the uniform-single-term
// expectation of the direction equal robust_grad exactly.
Vec minibatch_sgd_step(const CriterionContext& ctx, const Vec& theta,
                       const std::vector<std::size_t>& batch_indices, double eta);

// Step-weighted average sum_t nu_t theta^t, nu_t = schedule[t] / sum(schedule),
// over the recorded iterates.
Vec averaged_iterate(const RunTrace& trace, const std::vector<double>& schedule);

// Deterministic full-gradient baseline: one robust_grad step per pass on the
// same eta schedule; identical trace shape to sgd_minimize.
RunTrace full_gradient_descent(const CriterionContext& ctx, const SgdConfig& config);

// Pass-boundary trace as CSV (pass, criterion, theta_norm).
void write_trace_csv(const std::string& path, const RunTrace& trace);

}  // namespace dpro
