#pragma once

#include <cmath>
#include <functional>
#include <limits>

namespace dpro {

// Ambiguity transform family phi_beta(t) = beta * (exp(t/beta) - 1) on
// t >= 0, plus the exact identity transform for beta = infinity
// (ambiguity neutrality). The identity is a real branch, never a
// large-but-finite beta approximation, so neutral results are exact.
struct PhiSpec {
  double beta = std::numeric_limits<double>::infinity();

  static PhiSpec exponential(double beta);  // requires finite beta > 0
  static PhiSpec identity();

  bool is_identity() const { return std::isinf(beta); }
};

// beta * expm1(t / beta), or t for the identity. Throws std::domain_error
// for t < 0 (losses are nonnegative) and numeric_error when t/beta exceeds
// the exp range — saturating silently would corrupt argmin comparisons.
double phi(const PhiSpec& spec, double t);

// exp(t/beta) and exp(t/beta)/beta; (1, 0) for the identity.
double phi_prime(const PhiSpec& spec, double t);
double phi_second(const PhiSpec& spec, double t);

// Arrow-Pratt coefficient phi''/phi': constant 1/beta for the exponential
// family, 0 for the identity.
double arrow_pratt(const PhiSpec& spec, double t);

// sup of phi' over [0, k_bound]: exp(k_bound/beta), or 1 for the identity.
double m_phi(const PhiSpec& spec, double k_bound);

// Extension hook: the criterion code only ever needs a value and a first
// derivative, so alternative convex increasing transforms can be supplied
// as callables without touching the PhiSpec enum of shipped transforms.
struct PhiCallable {
  std::function<double(double)> value;
  std::function<double(double)> prime;
};

PhiCallable as_callable(const PhiSpec& spec);

}  // namespace dpro
