#include "dpro/ensemble.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "dpro/errors.hpp"
#include "dpro/parallel.hpp"

namespace dpro {

namespace {

void check_counts(int n_samples, int t) {
  if (n_samples < 1) throw std::invalid_argument("ensemble: need at least one sample");
  if (t < 1) throw std::invalid_argument("ensemble: need truncation level >= 1");
}

EnsembleMeta make_meta(ApproxScheme scheme, double alpha, const Dataset& data, int t,
                       const RngStream& base) {
  EnsembleMeta meta;
  meta.scheme = scheme;
  meta.alpha = alpha;
  meta.n = data.size();
  meta.t = t;
  meta.seed = base.seed();
  meta.substream = base.substream();
  return meta;
}

}  // namespace

const char* scheme_name(ApproxScheme scheme) {
  switch (scheme) {
    case ApproxScheme::sbmc: return "sbmc";
    case ApproxScheme::mdmc: return "mdmc";
    case ApproxScheme::bbmc: return "bbmc";
    case ApproxScheme::exact_empirical: return "empirical";
  }
  return "unknown";
}

ApproxScheme scheme_from_name(const std::string& name) {
  if (name == "sbmc") return ApproxScheme::sbmc;
  if (name == "mdmc") return ApproxScheme::mdmc;
  if (name == "bbmc") return ApproxScheme::bbmc;
  if (name == "empirical") return ApproxScheme::exact_empirical;
  throw config_error("unknown approximation scheme: " + name);
}

Observation centering_draw(const CenteringSpec& spec, const Dataset& data, RngStream& stream) {
  switch (spec.kind) {
    case CenteringKind::standard_normal_product: {
      Observation obs;
      obs.features = Vec(spec.feature_dim);
      for (Eigen::Index j = 0; j < obs.features.size(); ++j) obs.features[j] = stream.next_normal();
      obs.response = spec.response_mean + spec.response_sd * stream.next_normal();
      return obs;
    }
    case CenteringKind::compound_symmetry_normal: {
      Observation obs;
      if (spec.feature_dim < 1)
        throw std::invalid_argument("centering_draw: compound symmetry needs feature_dim >= 1");
      const auto x = sample_mvn_compound_symmetry(stream, spec.feature_dim, spec.rho);
      obs.features = Eigen::Map<const Vec>(x.data(), static_cast<Eigen::Index>(x.size()));
      obs.response = spec.response_mean + spec.response_sd * stream.next_normal();
      return obs;
    }
    case CenteringKind::binary_label_normal_product: {
      Observation obs;
      obs.features = Vec(spec.feature_dim);
      for (Eigen::Index j = 0; j < obs.features.size(); ++j) obs.features[j] = stream.next_normal();
      obs.response = stream.next_uniform() < 0.5 ? -1.0 : 1.0;
      return obs;
    }
    case CenteringKind::point_mass_list: {
      if (spec.points.empty())
        throw std::invalid_argument("centering_draw: point_mass_list has no points");
      return spec.points[uniform_index(stream, spec.points.size())];
    }
    case CenteringKind::empirical: {
      if (data.rows.empty())
        throw data_error("centering_draw: empirical centering over an empty dataset");
      return data.rows[uniform_index(stream, data.size())];
    }
    case CenteringKind::l1_variance_analytic:
      throw config_error(
          "centering_draw: the l1 variance rule is an analytic-moment hook and has no sampler");
  }
  throw std::invalid_argument("centering_draw: unknown kind");
}

Observation predictive_draw(const DpPrior& prior, const Dataset& data, RngStream& stream) {
  if (prior.alpha < 0.0) throw std::invalid_argument("predictive_draw: alpha must be >= 0");
  const auto n = static_cast<double>(data.size());
  if (data.rows.empty() && !(prior.alpha > 0.0))
    throw data_error("predictive_draw: empty dataset with alpha = 0");
  const double prior_weight = prior.alpha / (prior.alpha + n);
  // One coin first, then the chosen branch; keeps the draw sequence stable.
  const double u = stream.next_uniform();
  if (u < prior_weight) return centering_draw(prior.centering, data, stream);
  return data.rows[uniform_index(stream, data.size())];
}

WeightedEnsemble sbmc_ensemble(const DpPrior& prior, const Dataset& data, int n_samples, int t,
                               RngStream base, int threads) {
  check_counts(n_samples, t);
  if (data.rows.empty() && !(prior.alpha > 0.0))
    throw data_error("sbmc_ensemble: empty dataset with alpha = 0");
  const double eta = prior.alpha + static_cast<double>(data.size());

  WeightedEnsemble ens;
  ens.meta = make_meta(ApproxScheme::sbmc, prior.alpha, data, t, base);
  ens.samples.resize(static_cast<std::size_t>(n_samples));
  parallel_for(static_cast<std::size_t>(n_samples), threads, [&](std::size_t i) {
    RngStream s = base.child(i);
    WeightedSample& sample = ens.samples[i];
    sample.weights.resize(static_cast<std::size_t>(t) + 1);
    double stick_left = 1.0;
    for (int j = 0; j < t; ++j) {
      const double b = sample_beta_1_eta(s, eta);
      sample.weights[static_cast<std::size_t>(j)] = b * stick_left;
      stick_left *= 1.0 - b;
    }
    sample.weights.back() = stick_left;  // remainder rides on one extra atom
    sample.atoms.reserve(static_cast<std::size_t>(t) + 1);
    for (int j = 0; j < t + 1; ++j) sample.atoms.push_back(predictive_draw(prior, data, s));
  });
  return ens;
}

WeightedEnsemble mdmc_ensemble(const DpPrior& prior, const Dataset& data, int n_samples, int t,
                               RngStream base, int threads) {
  check_counts(n_samples, t);
  if (data.rows.empty() && !(prior.alpha > 0.0))
    throw data_error("mdmc_ensemble: empty dataset with alpha = 0");
  const double conc = (prior.alpha + static_cast<double>(data.size())) / static_cast<double>(t);

  WeightedEnsemble ens;
  ens.meta = make_meta(ApproxScheme::mdmc, prior.alpha, data, t, base);
  ens.samples.resize(static_cast<std::size_t>(n_samples));
  parallel_for(static_cast<std::size_t>(n_samples), threads, [&](std::size_t i) {
    RngStream s = base.child(i);
    WeightedSample& sample = ens.samples[i];
    sample.weights = sample_dirichlet_symmetric(s, t, conc);
    sample.atoms.reserve(static_cast<std::size_t>(t));
    for (int j = 0; j < t; ++j) sample.atoms.push_back(predictive_draw(prior, data, s));
  });
  return ens;
}

WeightedEnsemble bbmc_ensemble(const Dataset& data, int n_samples, RngStream base, int threads) {
  if (n_samples < 1) throw std::invalid_argument("ensemble: need at least one sample");
  if (data.rows.empty()) throw data_error("bbmc_ensemble: empty dataset");
  const auto n = static_cast<int>(data.size());

  WeightedEnsemble ens;
  ens.meta = make_meta(ApproxScheme::bbmc, 0.0, data, 0, base);
  ens.samples.resize(static_cast<std::size_t>(n_samples));
  parallel_for(static_cast<std::size_t>(n_samples), threads, [&](std::size_t i) {
    RngStream s = base.child(i);
    WeightedSample& sample = ens.samples[i];
    sample.weights = sample_dirichlet_symmetric(s, n, 1.0);
    sample.atoms = data.rows;  // the data itself, in order
  });
  return ens;
}

WeightedEnsemble exact_empirical_ensemble(const Dataset& data) {
  if (data.rows.empty()) throw data_error("exact_empirical_ensemble: empty dataset");
  WeightedEnsemble ens;
  ens.meta.scheme = ApproxScheme::exact_empirical;
  ens.meta.n = data.size();
  ens.samples.resize(1);
  ens.samples[0].weights.assign(data.size(), 1.0 / static_cast<double>(data.size()));
  ens.samples[0].atoms = data.rows;
  return ens;
}

namespace {

constexpr std::uint32_t kCacheMagic = 0x4e455044;  // "DPEN"
constexpr std::uint32_t kCacheVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const char* what) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw data_error(std::string("ensemble cache: truncated reading ") + what);
  return v;
}

}  // namespace

void save_ensemble(const std::string& path, const WeightedEnsemble& ensemble) {
  if (ensemble.samples.empty()) throw std::invalid_argument("save_ensemble: empty ensemble");
  const std::size_t k = ensemble.samples.front().atoms.size();
  const auto d = ensemble.samples.front().atoms.empty()
                     ? Eigen::Index{0}
                     : ensemble.samples.front().atoms.front().features.size();
  for (const auto& s : ensemble.samples)
    if (s.atoms.size() != k || s.weights.size() != k)
      throw std::invalid_argument("save_ensemble: ragged ensemble");

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("save_ensemble: cannot open " + path);

  put(out, kCacheMagic);
  put(out, kCacheVersion);
  put(out, static_cast<std::uint32_t>(ensemble.meta.scheme));
  put(out, ensemble.meta.alpha);
  put(out, ensemble.meta.n);
  put(out, static_cast<std::uint64_t>(ensemble.meta.t));
  put(out, static_cast<std::uint64_t>(ensemble.samples.size()));
  put(out, ensemble.meta.seed);
  put(out, ensemble.meta.substream);
  put(out, static_cast<std::uint64_t>(d));
  put(out, static_cast<std::uint64_t>(k));

  for (const auto& s : ensemble.samples)
    out.write(reinterpret_cast<const char*>(s.weights.data()),
              static_cast<std::streamsize>(k * sizeof(double)));
  for (const auto& s : ensemble.samples)
    for (const auto& a : s.atoms) put(out, a.response);
  for (const auto& s : ensemble.samples)
    for (const auto& a : s.atoms)
      out.write(reinterpret_cast<const char*>(a.features.data()),
                static_cast<std::streamsize>(static_cast<std::size_t>(d) * sizeof(double)));
  if (!out) throw data_error("save_ensemble: write failed for " + path);
}

WeightedEnsemble load_ensemble(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("load_ensemble: cannot open " + path);

  if (get<std::uint32_t>(in, "magic") != kCacheMagic)
    throw data_error("load_ensemble: not an ensemble cache: " + path);
  if (get<std::uint32_t>(in, "version") != kCacheVersion)
    throw data_error("load_ensemble: unsupported cache version in " + path);

  WeightedEnsemble ens;
  const auto scheme_raw = get<std::uint32_t>(in, "scheme");
  if (scheme_raw > static_cast<std::uint32_t>(ApproxScheme::exact_empirical))
    throw data_error("load_ensemble: bad scheme tag in " + path);
  ens.meta.scheme = static_cast<ApproxScheme>(scheme_raw);
  ens.meta.alpha = get<double>(in, "alpha");
  ens.meta.n = get<std::uint64_t>(in, "n");
  ens.meta.t = static_cast<int>(get<std::uint64_t>(in, "t"));
  const auto n_samples = get<std::uint64_t>(in, "n_samples");
  ens.meta.seed = get<std::uint64_t>(in, "seed");
  ens.meta.substream = get<std::uint64_t>(in, "substream");
  const auto d = get<std::uint64_t>(in, "feature_dim");
  const auto k = get<std::uint64_t>(in, "atoms_per_sample");

  ens.samples.resize(n_samples);
  for (auto& s : ens.samples) {
    s.weights.resize(k);
    in.read(reinterpret_cast<char*>(s.weights.data()),
            static_cast<std::streamsize>(k * sizeof(double)));
    if (!in) throw data_error("ensemble cache: truncated weights in " + path);
  }
  for (auto& s : ens.samples) {
    s.atoms.resize(k);
    for (auto& a : s.atoms) a.response = get<double>(in, "response");
  }
  for (auto& s : ens.samples)
    for (auto& a : s.atoms) {
      a.features = Vec(static_cast<Eigen::Index>(d));
      in.read(reinterpret_cast<char*>(a.features.data()),
              static_cast<std::streamsize>(d * sizeof(double)));
      if (!in) throw data_error("ensemble cache: truncated features in " + path);
    }
  return ens;
}

}  // namespace dpro
