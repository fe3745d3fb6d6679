#include "dpro/ambiguity.hpp"

#include <cmath>
#include <stdexcept>

#include "dpro/errors.hpp"

namespace dpro {

namespace {

// exp overflows just above 709; stop a bit earlier and report instead of
// handing back infinities.
constexpr double kExpCap = 700.0;

double checked_ratio(const PhiSpec& spec, double t) {
  if (t < 0.0) throw std::domain_error("phi: t must be nonnegative");
  const double r = t / spec.beta;
  if (r > kExpCap)
    throw numeric_error("phi: t/beta exceeds the exp range (loss too large for this beta)");
  return r;
}

}  // namespace

PhiSpec PhiSpec::exponential(double beta) {
  if (!(beta > 0.0) || std::isinf(beta) || std::isnan(beta))
    throw std::invalid_argument("PhiSpec: exponential beta must be finite and > 0");
  return PhiSpec{beta};
}

PhiSpec PhiSpec::identity() { return PhiSpec{}; }

double phi(const PhiSpec& spec, double t) {
  if (spec.is_identity()) {
    if (t < 0.0) throw std::domain_error("phi: t must be nonnegative");
    return t;
  }
  return spec.beta * std::expm1(checked_ratio(spec, t));
}

double phi_prime(const PhiSpec& spec, double t) {
  if (spec.is_identity()) {
    if (t < 0.0) throw std::domain_error("phi: t must be nonnegative");
    return 1.0;
  }
  return std::exp(checked_ratio(spec, t));
}

double phi_second(const PhiSpec& spec, double t) {
  if (spec.is_identity()) {
    if (t < 0.0) throw std::domain_error("phi: t must be nonnegative");
    return 0.0;
  }
  return std::exp(checked_ratio(spec, t)) / spec.beta;
}

double arrow_pratt(const PhiSpec& spec, double t) {
  return phi_second(spec, t) / phi_prime(spec, t);
}

double m_phi(const PhiSpec& spec, double k_bound) {
  if (!(k_bound > 0.0)) throw std::invalid_argument("m_phi: k_bound must be > 0");
  if (spec.is_identity()) return 1.0;
  return std::exp(k_bound / spec.beta);
}

PhiCallable as_callable(const PhiSpec& spec) {
  return PhiCallable{
      [spec](double t) { return phi(spec, t); },
      [spec](double t) { return phi_prime(spec, t); },
  };
}

}  // namespace dpro
