#pragma once

#include <cstdint>
#include <vector>

namespace dpro {

// Splittable counter-style generator (SplittableRandom design): a stream is
// a (state, gamma) pair with odd gamma, both derived by hashing
// (seed, substream_id). The same pair therefore names the same variate
// sequence on every platform and under any thread layout, and distinct
// substreams walk distinct orbits. Streams are cheap value types; copying
// one forks the sequence at its current position.
class RngStream {
 public:
  RngStream() = default;

  std::uint64_t next_u64();
  double next_uniform();  // strictly inside (0,1), 53-bit resolution
  double next_normal();   // standard normal via Box-Muller, no cached spare

  std::uint64_t seed() const { return seed_; }
  std::uint64_t substream() const { return substream_; }

  // Deterministic child streams: child(i) != child(j) for i != j, and a
  // child's sequence does not depend on how much of the parent has been
  // consumed (derivation uses only the parent's identity, not its position).
  RngStream child(std::uint64_t index) const;

 private:
  friend RngStream derive_stream(std::uint64_t seed, std::uint64_t substream_id);

  std::uint64_t state_ = 0;
  std::uint64_t gamma_ = 0x9e3779b97f4a7c15ULL;
  std::uint64_t seed_ = 0;
  std::uint64_t substream_ = 0;
};

RngStream derive_stream(std::uint64_t seed, std::uint64_t substream_id);

// Uniform draw from {0, ..., n-1} (one uniform variate consumed).
std::size_t uniform_index(RngStream& stream, std::size_t n);

// In-place Fisher-Yates shuffle driven by `stream`.
template <typename T>
void shuffle_indices(std::vector<T>& items, RngStream& stream) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[uniform_index(stream, i)]);
  }
}

// Beta(1, eta) by inverse CDF: 1 - U^(1/eta). Throws std::invalid_argument
// for eta <= 0.
double sample_beta_1_eta(RngStream& stream, double eta);

// Gamma(shape, 1) via Marsaglia-Tsang squeeze, boosted below shape 1 so
// sub-unit shapes are valid. Throws std::invalid_argument for shape <= 0.
double sample_gamma(RngStream& stream, double shape);

// Symmetric Dirichlet over t components, each gamma component with the given
// shape `conc`; normalized to the simplex. A numerically all-zero gamma draw
// is resampled once, then reported as a numeric_error.
std::vector<double> sample_dirichlet_symmetric(RngStream& stream, int t, double conc);

// Zero-mean, unit-variance Gaussian vector with constant pairwise covariance
// rho in [0,1), built from the shared-factor identity
// x_j = sqrt(rho) z0 + sqrt(1-rho) z_j.
std::vector<double> sample_mvn_compound_symmetry(RngStream& stream, int d, double rho);

}  // namespace dpro
