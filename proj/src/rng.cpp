#include "dpro/rng.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dpro/errors.hpp"

namespace dpro {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// Stafford "mix13" finalizer (the SplitMix64 output function).
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

// Gamma (increment) derivation: odd, with enough bit transitions that the
// Weyl sequence is well distributed.
inline std::uint64_t mix_gamma(std::uint64_t z) {
  z = mix64(z) | 1ULL;
  if (std::popcount(z ^ (z >> 1)) < 24) z ^= 0xaaaaaaaaaaaaaaaaULL;
  return z;
}

}  // namespace

RngStream derive_stream(std::uint64_t seed, std::uint64_t substream_id) {
  RngStream s;
  s.seed_ = seed;
  s.substream_ = substream_id;
  const std::uint64_t a = mix64(seed + kGolden);
  const std::uint64_t b = mix64(substream_id + 0x6a09e667f3bcc909ULL);
  s.state_ = mix64(a + b);
  s.gamma_ = mix_gamma(s.state_ + kGolden + b);
  return s;
}

RngStream RngStream::child(std::uint64_t index) const {
  return derive_stream(seed_, mix64(substream_ + 0xd1b54a32d192ed03ULL) + index);
}

std::uint64_t RngStream::next_u64() {
  state_ += gamma_;
  return mix64(state_);
}

double RngStream::next_uniform() {
  // 53-bit mantissa, offset by half an ulp so 0 and 1 are unreachable.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::next_normal() {
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t uniform_index(RngStream& stream, std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: empty range");
  // n is tiny relative to 2^53; scaling a uniform is bias-free enough here
  // and keeps the draw count fixed at one per index.
  const auto idx = static_cast<std::size_t>(stream.next_uniform() * static_cast<double>(n));
  return idx >= n ? n - 1 : idx;
}

double sample_beta_1_eta(RngStream& stream, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("sample_beta_1_eta: eta must be > 0");
  return 1.0 - std::pow(stream.next_uniform(), 1.0 / eta);
}

double sample_gamma(RngStream& stream, double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("sample_gamma: shape must be > 0");
  if (shape < 1.0) {
    // Boost: G(k) = G(k+1) * U^(1/k).
    const double g = sample_gamma(stream, shape + 1.0);
    return g * std::pow(stream.next_uniform(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / (3.0 * std::sqrt(d));
  for (;;) {
    const double x = stream.next_normal();
    const double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    const double v = t * t * t;
    const double u = stream.next_uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

std::vector<double> sample_dirichlet_symmetric(RngStream& stream, int t, double conc) {
  if (t < 1) throw std::invalid_argument("sample_dirichlet_symmetric: need t >= 1");
  if (!(conc > 0.0)) throw std::invalid_argument("sample_dirichlet_symmetric: conc must be > 0");
  std::vector<double> w(static_cast<std::size_t>(t));
  for (int attempt = 0; attempt < 2; ++attempt) {
    double sum = 0.0;
    for (auto& wi : w) {
      wi = sample_gamma(stream, conc);
      sum += wi;
    }
    if (sum > 0.0) {
      for (auto& wi : w) wi /= sum;
      return w;
    }
  }
  throw numeric_error("sample_dirichlet_symmetric: gamma draws underflowed to zero twice");
}

std::vector<double> sample_mvn_compound_symmetry(RngStream& stream, int d, double rho) {
  if (d < 1) throw std::invalid_argument("sample_mvn_compound_symmetry: need d >= 1");
  if (!(rho >= 0.0 && rho < 1.0))
    throw std::invalid_argument("sample_mvn_compound_symmetry: rho must be in [0,1)");
  const double shared = std::sqrt(rho);
  const double own = std::sqrt(1.0 - rho);
  const double z0 = stream.next_normal();
  std::vector<double> x(static_cast<std::size_t>(d));
  for (auto& xj : x) xj = shared * z0 + own * stream.next_normal();
  return x;
}

}  // namespace dpro
