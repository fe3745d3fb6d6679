#include "dpro/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace dpro {

namespace {

void check_dims(const LossSpec& spec, const Vec& theta, const Observation& obs) {
  if (spec.kind == LossKind::gaussian_location) {
    if (theta.size() != 1)
      throw std::invalid_argument("loss: gaussian_location needs a scalar theta");
    if (obs.features.size() != 0)
      throw std::invalid_argument("loss: gaussian_location observations carry no features");
  } else if (theta.size() != obs.features.size()) {
    throw std::invalid_argument("loss: theta dimension does not match features");
  }
}

// Margin z = y * x.theta, shared by the logistic value and gradient.
inline double margin(const Vec& theta, const Observation& obs) {
  return obs.response * obs.features.dot(theta);
}

inline void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string("loss: non-finite ") + what);
}

// sigma(-z) computed without overflowing either branch.
inline double sigmoid_neg(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

}  // namespace

double loss_eval(const LossSpec& spec, const Vec& theta, const Observation& obs) {
  check_dims(spec, theta, obs);
  check_finite(obs.response, "response");
  switch (spec.kind) {
    case LossKind::squared: {
      const double r = obs.response - obs.features.dot(theta);
      check_finite(r, "residual");
      return spec.scale * (r * r);
    }
    case LossKind::logistic: {
      const double z = margin(theta, obs);
      check_finite(z, "margin");
      // max(0,-z) + log(1 + exp(-|z|)): exact and overflow-free for any z.
      return spec.scale * (std::max(0.0, -z) + std::log1p(std::exp(-std::abs(z))));
    }
    case LossKind::gaussian_location: {
      const double r = obs.response - theta[0];
      check_finite(r, "residual");
      return spec.scale * (r * r);
    }
  }
  throw std::invalid_argument("loss: unknown kind");
}

Vec loss_grad(const LossSpec& spec, const Vec& theta, const Observation& obs) {
  Vec g = Vec::Zero(theta.size());
  loss_grad_accum(spec, theta, obs, 1.0, g);
  return g;
}

void loss_grad_accum(const LossSpec& spec, const Vec& theta, const Observation& obs,
                     double coeff, Vec& out) {
  check_dims(spec, theta, obs);
  check_finite(obs.response, "response");
  switch (spec.kind) {
    case LossKind::squared: {
      const double r = obs.response - obs.features.dot(theta);
      check_finite(r, "residual");
      out.noalias() += (-2.0 * spec.scale * r * coeff) * obs.features;
      return;
    }
    case LossKind::logistic: {
      const double z = margin(theta, obs);
      check_finite(z, "margin");
      const double s = sigmoid_neg(z);
      out.noalias() += (-spec.scale * obs.response * s * coeff) * obs.features;
      return;
    }
    case LossKind::gaussian_location: {
      const double r = obs.response - theta[0];
      check_finite(r, "residual");
      out[0] += -2.0 * spec.scale * r * coeff;
      return;
    }
  }
  throw std::invalid_argument("loss: unknown kind");
}

bool within_bound(const LossSpec& spec, double value) {
  return !spec.bound_k || value <= *spec.bound_k;
}

const char* loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::squared: return "squared";
    case LossKind::logistic: return "logistic";
    case LossKind::gaussian_location: return "gaussian-location";
  }
  return "unknown";
}

}  // namespace dpro
