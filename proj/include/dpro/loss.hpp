#pragma once

#include <Eigen/Core>
#include <optional>

namespace dpro {

using Vec = Eigen::VectorXd;

enum class LossKind { squared, logistic, gaussian_location };

struct LossSpec {
  LossKind kind = LossKind::squared;
  // Multiplicative factor c applied to the raw loss; the experiments run
  // everything at 1e-3 to keep exponentiated criteria tame.
  double scale = 1.0;
  // Optional theoretical bound K on c*h. Diagnostic only — evaluation never
  // clips; callers may warn when observed losses exceed it.
  std::optional<double> bound_k;
};

// One data point. gaussian_location observations carry no features (the
// response is the scalar xi); logistic responses are exactly +1 or -1.
struct Observation {
  Vec features;
  double response = 0.0;
};

// c * raw loss:
//   squared           (y - theta.x)^2
//   logistic          log(1 + exp(-y x.theta)), overflow-safe form
//   gaussian_location (xi - theta)^2  with scalar theta
double loss_eval(const LossSpec& spec, const Vec& theta, const Observation& obs);

// Exact analytic gradient of loss_eval in theta.
Vec loss_grad(const LossSpec& spec, const Vec& theta, const Observation& obs);

// Adds coeff * loss_grad(spec, theta, obs) into out without allocating.
void loss_grad_accum(const LossSpec& spec, const Vec& theta, const Observation& obs,
                     double coeff, Vec& out);

// Soft diagnostic for the bound_k field: true when unset or respected.
bool within_bound(const LossSpec& spec, double value);

const char* loss_kind_name(LossKind kind);

}  // namespace dpro
