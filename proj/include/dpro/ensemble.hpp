#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpro/data.hpp"
#include "dpro/rng.hpp"

namespace dpro {

// Named centering samplers for the process prior. The list is closed on
// purpose: the neutral-criterion code needs analytic prior moments for some
// of them, which arbitrary user-supplied samplers could not provide.
enum class CenteringKind {
  // iid N(0,1) features, N(response_mean, response_sd^2) response. With the
  // defaults this is the all-coordinates standard normal product.
  standard_normal_product,
  // features with unit variances and constant pairwise covariance rho,
  // response as above.
  compound_symmetry_normal,
  // fair-coin +/-1 response, iid N(0,1) features (classification prior).
  binary_label_normal_product,
  // uniform draw over a fixed list of points.
  point_mass_list,
  // sentinel: the empirical distribution of the dataset itself.
  empirical,
  // analytic-moment hook for the l1 prior-risk rule (see neutral_value);
  // has no sampler — drawing from it is an error.
  l1_variance_analytic,
};

struct CenteringSpec {
  CenteringKind kind = CenteringKind::standard_normal_product;
  int feature_dim = 0;  // 0 for location-style data
  double rho = 0.0;     // compound_symmetry_normal only
  double response_mean = 0.0;
  double response_sd = 1.0;
  std::vector<Observation> points;  // point_mass_list only
};

// One draw from the centering measure. The empirical sentinel draws
// uniformly from `data`.
Observation centering_draw(const CenteringSpec& spec, const Dataset& data, RngStream& stream);

struct DpPrior {
  double alpha = 0.0;  // concentration >= 0; 0 selects the Bayesian bootstrap
  CenteringSpec centering;
};

enum class ApproxScheme { sbmc, mdmc, bbmc, exact_empirical };

const char* scheme_name(ApproxScheme scheme);
ApproxScheme scheme_from_name(const std::string& name);

// One Monte Carlo draw from the posterior over distributions: a finite
// probability measure as parallel (weight, atom) arrays.
struct WeightedSample {
  std::vector<double> weights;
  std::vector<Observation> atoms;
};

struct EnsembleMeta {
  ApproxScheme scheme = ApproxScheme::mdmc;
  double alpha = 0.0;
  std::uint64_t n = 0;  // dataset size behind the posterior
  int t = 0;            // truncation/atom budget (0 where not applicable)
  std::uint64_t seed = 0;
  std::uint64_t substream = 0;  // base stream identity, so caches rebuild exactly
};

struct WeightedEnsemble {
  std::vector<WeightedSample> samples;
  EnsembleMeta meta;
};

// A single draw from the posterior's predictive distribution: with
// probability alpha/(alpha+n) a fresh centering draw, otherwise a uniformly
// chosen data point.
Observation predictive_draw(const DpPrior& prior, const Dataset& data, RngStream& stream);

// Stick-breaking scheme: per sample, T sticks Beta(1, alpha+n) give weights
// p_j = B_j prod_{k<j}(1-B_k), and the leftover prod_{k<=T}(1-B_k) rides on
// one extra predictive atom, so each sample has T+1 atoms (remainder last).
WeightedEnsemble sbmc_ensemble(const DpPrior& prior, const Dataset& data, int n_samples, int t,
                               RngStream base, int threads = 1);

// Dirichlet-weight scheme (the recommended default): per sample, T
// predictive atoms with symmetric Dirichlet((alpha+n)/T) weights.
WeightedEnsemble mdmc_ensemble(const DpPrior& prior, const Dataset& data, int n_samples, int t,
                               RngStream base, int threads = 1);

// Bayesian bootstrap: atoms are exactly the n data points in order, weights
// are flat-Dirichlet (normalized unit exponentials). No predictive draws.
WeightedEnsemble bbmc_ensemble(const Dataset& data, int n_samples, RngStream base,
                               int threads = 1);

// The exact empirical measure as a degenerate one-sample ensemble
// (weights 1/n); used for neutral-consistency checks and exact-weight fits.
WeightedEnsemble exact_empirical_ensemble(const Dataset& data);

// Columnar binary cache (little-endian): fixed header (magic, version,
// scheme, alpha, n, T, N, seed, substream, feature_dim, atoms_per_sample)
// followed by the weight column, the response column, and the feature block,
// each sample-major. Round-trips bit-exactly.
void save_ensemble(const std::string& path, const WeightedEnsemble& ensemble);
WeightedEnsemble load_ensemble(const std::string& path);

}  // namespace dpro
