#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dpro/criterion.hpp"
#include "dpro/errors.hpp"
#include "dpro/experiments.hpp"
#include "dpro/format.hpp"
#include "dpro/optimizer.hpp"

using namespace dpro;
using ordered_json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Small shared pieces
// ---------------------------------------------------------------------------

PhiSpec parse_beta(const std::string& token) {
  if (token == "inf") return PhiSpec::identity();
  double value = 0.0;
  std::size_t used = 0;
  try {
    value = std::stod(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != token.size() || !std::isfinite(value) || !(value > 0.0)) {
    throw config_error("beta must be a positive number or 'inf', got '" + token + "'");
  }
  return PhiSpec::exponential(value);
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "squared") return LossKind::squared;
  if (name == "logistic") return LossKind::logistic;
  if (name == "location") return LossKind::gaussian_location;
  throw config_error("unknown loss '" + name + "' (choose squared, logistic, location)");
}

CenteringSpec make_centering(const std::string& kind, int feature_dim, double mean, double sd,
                             double rho) {
  CenteringSpec c;
  if (kind == "normal") {
    c.kind = rho > 0.0 ? CenteringKind::compound_symmetry_normal
                       : CenteringKind::standard_normal_product;
  } else if (kind == "binary-label") {
    c.kind = CenteringKind::binary_label_normal_product;
  } else if (kind == "empirical") {
    c.kind = CenteringKind::empirical;
  } else {
    throw config_error("unknown centering '" + kind +
                       "' (choose normal, binary-label, empirical)");
  }
  if (!(sd > 0.0)) throw config_error("centering response sd must be positive");
  if (!(rho >= 0.0 && rho < 1.0)) throw config_error("centering rho must lie in [0, 1)");
  c.feature_dim = feature_dim;
  c.rho = rho;
  c.response_mean = mean;
  c.response_sd = sd;
  return c;
}

WeightedEnsemble build_ensemble(const DpPrior& prior, const Dataset& data,
                                const std::string& approx, int n_samples, int trunc,
                                RngStream base, int threads) {
  switch (scheme_from_name(approx)) {
    case ApproxScheme::sbmc:
      return sbmc_ensemble(prior, data, n_samples, trunc, base, threads);
    case ApproxScheme::mdmc:
      return mdmc_ensemble(prior, data, n_samples, trunc, base, threads);
    case ApproxScheme::bbmc:
      return bbmc_ensemble(data, n_samples, base, threads);
    case ApproxScheme::exact_empirical:
      return exact_empirical_ensemble(data);
  }
  throw config_error("unknown approximation scheme: " + approx);
}

// out.json -> out_figure.csv / out_table.csv companions
std::string companion_path(const std::string& out, const std::string& suffix) {
  const std::string ext = ".json";
  if (out.size() > ext.size() && out.compare(out.size() - ext.size(), ext.size(), ext) == 0) {
    return out.substr(0, out.size() - ext.size()) + suffix;
  }
  return out + suffix;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open output file: " + path);
  out << content;
  out.flush();
  if (!out) throw data_error("failed while writing output file: " + path);
}

void write_json(const std::string& path, const ordered_json& body) {
  write_file(path, body.dump(2) + "\n");
}

ordered_json vec_json(const Vec& v) {
  ordered_json arr = ordered_json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) arr.push_back(v[k]);
  return arr;
}

ordered_json metric_json(const MetricRow& row) {
  ordered_json j;
  j["test_risk"] = row.test_risk;
  j["mean_loss"] = row.mean_loss;
  if (row.coef_l2_dist) j["coef_l2_dist"] = *row.coef_l2_dist;
  j["coef_l2_norm"] = row.coef_l2_norm;
  return j;
}

ordered_json replication_json(const ReplicationReport& report) {
  ordered_json j;
  j["mean"] = metric_json(report.mean);
  j["std"] = metric_json(report.std_dev);
  ordered_json batches = ordered_json::array();
  for (const MetricRow& row : report.per_batch) batches.push_back(metric_json(row));
  j["batches"] = batches;
  return j;
}

ordered_json cv_json(const CvResult& cv) {
  ordered_json j;
  j["best_alpha"] = cv.best_alpha;
  ordered_json table = ordered_json::array();
  for (std::size_t a = 0; a < cv.alphas.size(); ++a) {
    ordered_json row;
    row["alpha"] = cv.alphas[a];
    row["risk"] = cv.risks[a];
    table.push_back(row);
  }
  j["table"] = table;
  return j;
}

ordered_json trace_json(const RunTrace& trace) {
  ordered_json j;
  ordered_json pass = ordered_json::array();
  ordered_json criterion = ordered_json::array();
  ordered_json norm = ordered_json::array();
  for (std::size_t k = 0; k < trace.criterion_values.size(); ++k) {
    pass.push_back(k);
    criterion.push_back(trace.criterion_values[k]);
    norm.push_back(trace.theta_norms[k]);
  }
  j["pass"] = pass;
  j["criterion"] = criterion;
  j["theta_norm"] = norm;
  return j;
}

const char* loss_cli_name(LossKind kind) {
  switch (kind) {
    case LossKind::squared:
      return "squared";
    case LossKind::logistic:
      return "logistic";
    case LossKind::gaussian_location:
      return "location";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// fit: minimize the robust criterion on one CSV dataset
// ---------------------------------------------------------------------------

struct FitArgs {
  std::string data;
  std::string test;
  std::string loss = "squared";
  double loss_scale = 1e-3;
  std::string centering = "normal";
  double center_mean = 0.0, center_sd = 1.0, center_rho = 0.0;
  double alpha = 1.0;
  std::string beta = "inf";
  std::string approx = "mdmc";
  int mc_samples = 100;
  int trunc = 50;
  int passes = 100;
  double step_a = 50.0, step_b = 100.0;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
  std::string trace_csv;
};

void run_fit(const FitArgs& args) {
  LossSpec loss{parse_loss_kind(args.loss), args.loss_scale, {}};
  const PhiSpec phi = parse_beta(args.beta);
  const Dataset train = load_csv(args.data, loss.kind);
  const int feature_dim =
      loss.kind == LossKind::gaussian_location ? 0 : static_cast<int>(train.feature_dim());

  DpPrior prior;
  prior.alpha = args.alpha;
  prior.centering = make_centering(args.centering, feature_dim, args.center_mean,
                                   args.center_sd, args.center_rho);

  const WeightedEnsemble ensemble =
      build_ensemble(prior, train, args.approx, args.mc_samples, args.trunc,
                     derive_stream(args.seed, 1), args.threads);
  const CriterionContext ctx(ensemble, loss, phi);

  SgdConfig sgd;
  sgd.step_a = args.step_a;
  sgd.step_b = args.step_b;
  sgd.passes = args.passes;
  sgd.seed = args.seed;
  sgd.threads = args.threads;
  sgd.theta0 = Vec::Zero(loss.kind == LossKind::gaussian_location ? 1 : feature_dim);

  const RunTrace trace = sgd_minimize(ctx, sgd);
  if (trace.aborted) throw numeric_error("fit aborted: " + trace.abort_reason);
  if (!args.trace_csv.empty()) write_trace_csv(args.trace_csv, trace);

  ordered_json report;
  report["command"] = "fit";
  ordered_json config;
  config["data"] = args.data;
  if (!args.test.empty()) config["test"] = args.test;
  config["loss"] = args.loss;
  config["loss_scale"] = args.loss_scale;
  config["centering"] = args.centering;
  config["center_mean"] = args.center_mean;
  config["center_sd"] = args.center_sd;
  config["center_rho"] = args.center_rho;
  config["alpha"] = args.alpha;
  config["beta"] = args.beta;
  config["approx"] = args.approx;
  config["mc_samples"] = args.mc_samples;
  config["trunc"] = args.trunc;
  config["passes"] = args.passes;
  config["step_a"] = args.step_a;
  config["step_b"] = args.step_b;
  config["seed"] = args.seed;
  report["config"] = config;

  ordered_json result;
  result["theta"] = vec_json(trace.final_theta);
  result["criterion"] = trace.criterion_values.back();
  result["updates"] = trace.updates;
  result["trace"] = trace_json(trace);
  if (!args.test.empty()) {
    const Dataset test = load_csv(args.test, loss.kind);
    result["metrics"] = metric_json(compute_metrics(trace.final_theta, test, loss));
  }
  report["result"] = result;

  write_json(args.out, report);
  std::cout << "fit: wrote " << args.out << " (criterion "
            << format_double(trace.criterion_values.back()) << ", " << trace.updates
            << " updates)\n";
}

// ---------------------------------------------------------------------------
// simulate: the three synthetic studies, three methods each, paired data
// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string dgp;
  int replications = 0;  // resolved per protocol
  int test_n = 0;
  int train_n = 0;
  int dim = 0;
  int support = -1;
  double noise_sd = -1.0;
  double feature_rho = -1.0;
  int clean_n = -1, outlier_n = -1;
  double outlier_mean = 5.0, outlier_sd = 1.0;
  double alpha = -1.0;
  std::string beta = "1";
  std::string approx = "mdmc";
  int mc_samples = 0;
  int trunc = 50;
  int passes = 0;
  double step_a = -1.0, step_b = 100.0;
  double loss_scale = 1e-3;
  int baseline_iterations = 2000;
  std::uint64_t seed = 0;
  int threads = 1;
  bool paper_scale = false;
  std::string out;
  std::string figure_csv;
};

struct SimProtocol {
  DgpSpec dgp;
  LossKind loss = LossKind::squared;
  CenteringSpec centering;
  BaselineKind neutral = BaselineKind::ridge;
  BaselineKind plain = BaselineKind::ols;
  double alpha = 1.0;
  double step_a = 50.0;
  int passes = 34;
  int replications = 20;
  int test_n = 2000;
  int mc_samples = 100;
};

SimProtocol sim_protocol(const std::string& name, bool paper_scale) {
  SimProtocol p;
  if (name == "linreg") {
    p.dgp.kind = DgpKind::sparse_linreg;
    p.loss = LossKind::squared;
    p.centering = make_centering("normal", p.dgp.d, 0.0, 1.0, 0.0);
    p.neutral = BaselineKind::ridge;
    p.plain = BaselineKind::ols;
    p.alpha = 1.0 / p.dgp.n;
    p.step_a = 50.0;
    p.passes = 34;
    p.replications = paper_scale ? 200 : 20;
    p.mc_samples = paper_scale ? 300 : 100;
  } else if (name == "gauss-outlier") {
    p.dgp.kind = DgpKind::gaussian_outliers;
    p.loss = LossKind::gaussian_location;
    // the centering mean is the contaminated-mixture mean the neutral
    // estimator shrinks toward
    const double mix_mean = (10.0 * 0.0 + 3.0 * 5.0) / 13.0;
    p.centering = make_centering("normal", 0, mix_mean, 1.0, 0.0);
    p.neutral = BaselineKind::location_pull;
    p.plain = BaselineKind::location_mle;
    p.alpha = 1.0;
    p.step_a = 20.0;
    p.passes = 167;
    p.replications = paper_scale ? 100 : 20;
    p.mc_samples = paper_scale ? 300 : 100;
  } else if (name == "logit") {
    p.dgp.kind = DgpKind::sparse_logit;
    p.loss = LossKind::logistic;
    p.centering = make_centering("binary-label", p.dgp.d, 0.0, 1.0, 0.0);
    p.neutral = BaselineKind::logit_l2;
    p.plain = BaselineKind::logit_plain;
    p.alpha = 1.0 / p.dgp.n;
    p.step_a = 1000.0;
    p.passes = 250;
    p.replications = paper_scale ? 200 : 20;
    p.mc_samples = paper_scale ? 200 : 100;
  } else {
    throw config_error("unknown dgp '" + name + "' (choose linreg, gauss-outlier, logit)");
  }
  p.test_n = paper_scale ? 5000 : 2000;
  return p;
}

void run_simulate(const SimulateArgs& args) {
  SimProtocol proto = sim_protocol(args.dgp, args.paper_scale);
  // explicit flags override the protocol defaults (sentinels mean "not given")
  if (args.train_n > 0) proto.dgp.n = args.train_n;
  if (args.dim > 0) proto.dgp.d = args.dim;
  if (args.support >= 0) proto.dgp.s = args.support;
  if (args.noise_sd >= 0.0) proto.dgp.sigma = args.noise_sd;
  if (args.feature_rho >= 0.0) proto.dgp.rho = args.feature_rho;
  if (args.clean_n >= 0) proto.dgp.n_clean = args.clean_n;
  if (args.outlier_n >= 0) proto.dgp.n_out = args.outlier_n;
  proto.dgp.outlier_mean = args.outlier_mean;
  proto.dgp.outlier_sd = args.outlier_sd;
  if (args.replications > 0) proto.replications = args.replications;
  if (args.test_n > 0) proto.test_n = args.test_n;
  if (args.alpha >= 0.0) proto.alpha = args.alpha;
  if (args.mc_samples > 0) proto.mc_samples = args.mc_samples;
  if (args.passes > 0) proto.passes = args.passes;
  if (args.step_a > 0.0) proto.step_a = args.step_a;
  if (proto.dgp.kind == DgpKind::gaussian_outliers) {
    // keep the centering on the mixture mean implied by the (possibly
    // overridden) contamination setup
    const double total = proto.dgp.n_clean + proto.dgp.n_out;
    proto.centering.response_mean =
        total > 0 ? proto.dgp.n_out * proto.dgp.outlier_mean / total : 0.0;
  } else {
    proto.centering.feature_dim = proto.dgp.d;
  }

  const int train_rows = proto.dgp.kind == DgpKind::gaussian_outliers
                             ? proto.dgp.n_clean + proto.dgp.n_out
                             : proto.dgp.n;

  TrainSettings robust;
  robust.scheme = scheme_from_name(args.approx);
  robust.mc_samples = proto.mc_samples;
  robust.trunc = args.trunc;
  robust.alpha = proto.alpha;
  robust.centering = proto.centering;
  robust.aversion = parse_beta(args.beta);
  robust.loss = LossSpec{proto.loss, args.loss_scale, {}};
  robust.sgd.step_a = proto.step_a;
  robust.sgd.step_b = args.step_b;
  robust.sgd.passes = proto.passes;
  robust.sgd.seed = args.seed;

  ReplicateSettings settings;
  settings.robust = robust;
  settings.regularized = proto.neutral;
  settings.unregularized = proto.plain;
  settings.penalty =
      baseline_penalty(proto.neutral, proto.alpha, static_cast<std::size_t>(train_rows));
  settings.baseline_iterations = args.baseline_iterations;
  settings.true_coef = dgp_true_coef(proto.dgp);
  settings.threads = args.threads;

  // the same stream for every method keeps the per-batch data identical
  // across methods: the comparisons below are paired
  const RngStream stream = derive_stream(args.seed, 0);
  const ReplicationReport rep_robust =
      batch_replicate(proto.dgp, proto.test_n, proto.replications, FitMethod::robust, settings,
                      stream);
  const ReplicationReport rep_neutral =
      batch_replicate(proto.dgp, proto.test_n, proto.replications, FitMethod::regularized,
                      settings, stream);
  const ReplicationReport rep_plain =
      batch_replicate(proto.dgp, proto.test_n, proto.replications, FitMethod::unregularized,
                      settings, stream);

  ordered_json report;
  report["command"] = "simulate";
  ordered_json config;
  config["dgp"] = args.dgp;
  config["replications"] = proto.replications;
  config["test_n"] = proto.test_n;
  if (proto.dgp.kind == DgpKind::gaussian_outliers) {
    config["clean_n"] = proto.dgp.n_clean;
    config["outlier_n"] = proto.dgp.n_out;
    config["outlier_mean"] = proto.dgp.outlier_mean;
    config["outlier_sd"] = proto.dgp.outlier_sd;
  } else {
    config["train_n"] = proto.dgp.n;
    config["dim"] = proto.dgp.d;
    config["support"] = proto.dgp.s;
    config["feature_rho"] = proto.dgp.rho;
    if (proto.dgp.kind == DgpKind::sparse_linreg) config["noise_sd"] = proto.dgp.sigma;
  }
  config["loss"] = loss_cli_name(proto.loss);
  config["loss_scale"] = args.loss_scale;
  config["alpha"] = proto.alpha;
  config["beta"] = args.beta;
  config["approx"] = args.approx;
  config["mc_samples"] = proto.mc_samples;
  config["trunc"] = args.trunc;
  config["passes"] = proto.passes;
  config["step_a"] = proto.step_a;
  config["step_b"] = args.step_b;
  config["baseline_iterations"] = args.baseline_iterations;
  config["seed"] = args.seed;
  config["paper_scale"] = args.paper_scale;
  report["config"] = config;

  ordered_json results;
  results["robust"] = replication_json(rep_robust);
  results["neutral"] = replication_json(rep_neutral);
  results["plain"] = replication_json(rep_plain);
  report["results"] = results;
  write_json(args.out, report);

  // long-format bar-chart data: one row per method and metric
  const std::string figure_path =
      args.figure_csv.empty() ? companion_path(args.out, "_figure.csv") : args.figure_csv;
  std::string csv = "method,metric,mean,std\n";
  const std::pair<const char*, const ReplicationReport*> blocks[] = {
      {"robust", &rep_robust}, {"neutral", &rep_neutral}, {"plain", &rep_plain}};
  for (const auto& [name, rep] : blocks) {
    csv += std::string(name) + ",test_risk," + format_double(rep->mean.test_risk) + "," +
           format_double(rep->std_dev.test_risk) + "\n";
    csv += std::string(name) + ",mean_loss," + format_double(rep->mean.mean_loss) + "," +
           format_double(rep->std_dev.mean_loss) + "\n";
    if (rep->mean.coef_l2_dist && rep->std_dev.coef_l2_dist) {
      csv += std::string(name) + ",coef_l2_dist," + format_double(*rep->mean.coef_l2_dist) +
             "," + format_double(*rep->std_dev.coef_l2_dist) + "\n";
    }
    csv += std::string(name) + ",coef_l2_norm," + format_double(rep->mean.coef_l2_norm) + "," +
           format_double(rep->std_dev.coef_l2_norm) + "\n";
  }
  write_file(figure_path, csv);
  std::cout << "simulate: wrote " << args.out << " and " << figure_path << "\n";
}

// ---------------------------------------------------------------------------
// cv: k-fold concentration selection for the robust criterion
// ---------------------------------------------------------------------------

struct CvArgs {
  std::string data;
  std::vector<double> grid;
  int folds = 10;
  std::string loss = "squared";
  double loss_scale = 1e-3;
  std::string centering = "normal";
  double center_mean = 0.0, center_sd = 1.0, center_rho = 0.0;
  std::string beta = "1";
  std::string approx = "mdmc";
  int mc_samples = 100;
  int trunc = 50;
  int passes = 100;
  double step_a = 50.0, step_b = 100.0;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
  std::string table_csv;
};

void run_cv(const CvArgs& args) {
  LossSpec loss{parse_loss_kind(args.loss), args.loss_scale, {}};
  const Dataset data = load_csv(args.data, loss.kind);
  const int feature_dim =
      loss.kind == LossKind::gaussian_location ? 0 : static_cast<int>(data.feature_dim());

  TrainSettings settings;
  settings.scheme = scheme_from_name(args.approx);
  settings.mc_samples = args.mc_samples;
  settings.trunc = args.trunc;
  settings.centering = make_centering(args.centering, feature_dim, args.center_mean,
                                      args.center_sd, args.center_rho);
  settings.aversion = parse_beta(args.beta);
  settings.loss = loss;
  settings.sgd.step_a = args.step_a;
  settings.sgd.step_b = args.step_b;
  settings.sgd.passes = args.passes;
  settings.sgd.seed = args.seed;
  settings.threads = args.threads;

  const CvResult cv = kfold_cv(data, args.folds, args.grid, settings, derive_stream(args.seed, 1));

  ordered_json report;
  report["command"] = "cv";
  ordered_json config;
  config["data"] = args.data;
  config["folds"] = args.folds;
  config["grid"] = args.grid;
  config["loss"] = args.loss;
  config["loss_scale"] = args.loss_scale;
  config["centering"] = args.centering;
  config["center_mean"] = args.center_mean;
  config["center_sd"] = args.center_sd;
  config["center_rho"] = args.center_rho;
  config["beta"] = args.beta;
  config["approx"] = args.approx;
  config["mc_samples"] = args.mc_samples;
  config["trunc"] = args.trunc;
  config["passes"] = args.passes;
  config["step_a"] = args.step_a;
  config["step_b"] = args.step_b;
  config["seed"] = args.seed;
  report["config"] = config;
  report["result"] = cv_json(cv);
  write_json(args.out, report);

  const std::string table_path =
      args.table_csv.empty() ? companion_path(args.out, "_table.csv") : args.table_csv;
  std::string csv = "alpha,risk\n";
  for (std::size_t a = 0; a < cv.alphas.size(); ++a) {
    csv += format_double(cv.alphas[a]) + "," + format_double(cv.risks[a]) + "\n";
  }
  write_file(table_path, csv);
  std::cout << "cv: best alpha " << format_double(cv.best_alpha) << ", wrote " << args.out
            << " and " << table_path << "\n";
}

// ---------------------------------------------------------------------------
// replicate: the three real-data table protocols
// ---------------------------------------------------------------------------

struct ReplicateArgs {
  std::string dataset;
  std::string data;  // defaults to data/<name>.csv
  double alpha = -1.0;     // fixed DP concentration skips its CV stage
  double l1_alpha = -1.0;  // fixed l1 concentration skips its CV stage
  std::string beta = "1";
  std::string approx = "mdmc";
  int mc_samples = 0;
  int trunc = 100;
  int passes = 0;
  double step_a = -1.0, step_b = 100.0;
  double loss_scale = 1e-3;
  int baseline_iterations = 1000;
  std::uint64_t seed = 0;
  int threads = 1;
  bool paper_scale = false;
  std::string out;
  std::string table_csv;
};

struct Study {
  std::string csv;
  LossKind loss = LossKind::squared;
  bool standardize_response = true;
  int train_n = 0;
  int batches = 0;
  int batch_size = 0;
  int folds = 0;
  std::vector<double> grid;
  BaselineKind l1 = BaselineKind::lasso;
  BaselineKind plain = BaselineKind::ols;
  double step_a = 100.0;
  int paper_passes = 500;
};

Study study_for(const std::string& name) {
  const std::vector<double> wide_grid = {0.01, 0.1, 0.5, 1,  1.5, 2,  2.5, 3,  3.5,
                                         4,    4.5, 5,   6,  7,   8,  9,   10, 11,
                                         12,   13,  14,  15, 16,  17, 18,  19, 20};
  Study st;
  if (name == "wine") {
    st.csv = "data/wine.csv";
    st.loss = LossKind::squared;
    st.standardize_response = true;
    st.train_n = 300;
    st.batches = 10;
    st.batch_size = 30;
    st.folds = 10;
    st.grid = wide_grid;
    st.l1 = BaselineKind::lasso;
    st.plain = BaselineKind::ols;
    st.step_a = 100.0;
    st.paper_passes = 500;
  } else if (name == "pima") {
    st.csv = "data/pima.csv";
    st.loss = LossKind::logistic;
    st.standardize_response = false;
    st.train_n = 300;
    st.batches = 15;
    st.batch_size = 20;
    st.folds = 15;
    st.grid = wide_grid;
    st.l1 = BaselineKind::logit_l1;
    st.plain = BaselineKind::logit_plain;
    st.step_a = 1000.0;
    st.paper_passes = 1500;
  } else if (name == "liver") {
    st.csv = "data/liver.csv";
    st.loss = LossKind::squared;
    st.standardize_response = true;
    st.train_n = 200;
    st.batches = 10;
    st.batch_size = 20;
    st.folds = 10;
    st.grid = {0.1, 1, 2, 2.5, 3, 3.5, 4, 4.5, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
    st.l1 = BaselineKind::lasso;
    st.plain = BaselineKind::ols;
    st.step_a = 30.0;
    st.paper_passes = 1500;
  } else {
    throw config_error("unknown dataset '" + name + "' (choose wine, pima, liver)");
  }
  return st;
}

void run_replicate(const ReplicateArgs& args) {
  const Study st = study_for(args.dataset);
  const std::string csv_path = args.data.empty() ? st.csv : args.data;
  LossSpec loss{st.loss, args.loss_scale, {}};

  Dataset raw;
  try {
    raw = load_csv(csv_path, loss.kind);
  } catch (const data_error& e) {
    throw data_error(std::string(e.what()) +
                     " (run scripts/fetch_data.sh and scripts/prepare_data.py to stage the "
                     "datasets under data/)");
  }
  if (raw.size() < static_cast<std::size_t>(st.train_n) + 1) {
    throw data_error(args.dataset + " needs at least " + std::to_string(st.train_n + 1) +
                     " rows, found " + std::to_string(raw.size()));
  }

  // the optimizer pass budget stays at the protocol's full value even at
  // desk scale: under-converged robust fits show inflated batch spread,
  // which is the statistic these studies compare
  const int mc_samples = args.mc_samples > 0 ? args.mc_samples : (args.paper_scale ? 200 : 100);
  const int passes = args.passes > 0 ? args.passes : st.paper_passes;
  const double step_a = args.step_a > 0.0 ? args.step_a : st.step_a;

  // shuffle once, carve off the training pool, fit the standardization on it
  RngStream split_stream = derive_stream(args.seed, 0);
  const Dataset shuffled = shuffle_rows(raw, split_stream);
  Dataset pool, held_out;
  pool.feature_names = shuffled.feature_names;
  held_out.feature_names = shuffled.feature_names;
  for (std::size_t i = 0; i < shuffled.size(); ++i) {
    (i < static_cast<std::size_t>(st.train_n) ? pool : held_out)
        .rows.push_back(shuffled.rows[i]);
  }
  auto [pool_std, stats] = standardize(pool, st.standardize_response);
  const Dataset test_std = standardize_apply(held_out, stats);
  const int d = static_cast<int>(pool_std.feature_dim());

  TrainSettings robust;
  robust.scheme = scheme_from_name(args.approx);
  robust.mc_samples = mc_samples;
  robust.trunc = args.trunc;
  robust.centering = st.loss == LossKind::logistic
                         ? make_centering("binary-label", d, 0.0, 1.0, 0.0)
                         : make_centering("normal", d, 0.0, 1.0, 0.0);
  robust.aversion = parse_beta(args.beta);
  robust.loss = loss;
  robust.sgd.step_a = step_a;
  robust.sgd.step_b = args.step_b;
  robust.sgd.passes = passes;
  robust.sgd.seed = args.seed;
  robust.threads = args.threads;

  // the two selection stages share one stream, hence one fold assignment
  std::optional<CvResult> dp_cv, l1_cv;
  double dp_alpha = args.alpha;
  if (dp_alpha < 0.0) {
    dp_cv = kfold_cv(pool_std, st.folds, st.grid, robust, derive_stream(args.seed, 1));
    dp_alpha = dp_cv->best_alpha;
  }
  double l1_alpha = args.l1_alpha;
  if (l1_alpha < 0.0) {
    l1_cv = kfold_cv_baseline(pool_std, st.folds, st.grid, st.l1, loss,
                              args.baseline_iterations, derive_stream(args.seed, 1));
    l1_alpha = l1_cv->best_alpha;
  }

  robust.alpha = dp_alpha;
  ReplicateSettings settings;
  settings.robust = robust;
  settings.regularized = st.l1;
  settings.unregularized = st.plain;
  settings.penalty =
      baseline_penalty(st.l1, l1_alpha, static_cast<std::size_t>(st.batch_size));
  settings.baseline_iterations = args.baseline_iterations;
  settings.threads = args.threads;

  const RngStream batch_stream = derive_stream(args.seed, 3);
  const ReplicationReport rep_plain =
      batch_replicate(pool_std, test_std, st.batches, st.batch_size, FitMethod::unregularized,
                      settings, batch_stream);
  const ReplicationReport rep_l1 =
      batch_replicate(pool_std, test_std, st.batches, st.batch_size, FitMethod::regularized,
                      settings, batch_stream);
  const ReplicationReport rep_dp =
      batch_replicate(pool_std, test_std, st.batches, st.batch_size, FitMethod::robust,
                      settings, batch_stream);

  ordered_json report;
  report["command"] = "replicate";
  ordered_json config;
  config["dataset"] = args.dataset;
  config["data"] = csv_path;
  config["loss"] = loss_cli_name(st.loss);
  config["loss_scale"] = args.loss_scale;
  config["standardize_response"] = st.standardize_response;
  config["train_rows"] = st.train_n;
  config["test_rows"] = static_cast<std::uint64_t>(test_std.size());
  config["folds"] = st.folds;
  config["batches"] = st.batches;
  config["batch_size"] = st.batch_size;
  config["grid"] = st.grid;
  config["alpha"] = dp_alpha;
  config["l1_alpha"] = l1_alpha;
  config["beta"] = args.beta;
  config["approx"] = args.approx;
  config["mc_samples"] = mc_samples;
  config["trunc"] = args.trunc;
  config["passes"] = passes;
  config["step_a"] = step_a;
  config["step_b"] = args.step_b;
  config["baseline_iterations"] = args.baseline_iterations;
  config["seed"] = args.seed;
  config["paper_scale"] = args.paper_scale;
  report["config"] = config;

  ordered_json selection;
  if (dp_cv) selection["dp"] = cv_json(*dp_cv);
  if (l1_cv) selection["l1"] = cv_json(*l1_cv);
  if (!selection.empty()) report["cv"] = selection;

  ordered_json results;
  results["unregularized"] = replication_json(rep_plain);
  results["l1_regularized"] = replication_json(rep_l1);
  results["dp_robust"] = replication_json(rep_dp);
  report["results"] = results;
  write_json(args.out, report);

  // the tables' layout: method columns, average and spread rows of the
  // scaled test loss
  const std::string table_path =
      args.table_csv.empty() ? companion_path(args.out, "_table.csv") : args.table_csv;
  std::string csv = ",Unregularized,L1 Regularized,DP Robust\n";
  csv += "Average," + format_double(rep_plain.mean.mean_loss) + "," +
         format_double(rep_l1.mean.mean_loss) + "," + format_double(rep_dp.mean.mean_loss) +
         "\n";
  csv += "Standard Deviation," + format_double(rep_plain.std_dev.mean_loss) + "," +
         format_double(rep_l1.std_dev.mean_loss) + "," +
         format_double(rep_dp.std_dev.mean_loss) + "\n";
  write_file(table_path, csv);
  std::cout << "replicate: " << args.dataset << " done (alpha "
            << format_double(dp_alpha) << ", l1 " << format_double(l1_alpha) << "), wrote "
            << args.out << " and " << table_path << "\n";
}

// ---------------------------------------------------------------------------
// ensemble-cache: build posterior samples once, store them in binary form
// ---------------------------------------------------------------------------

struct CacheArgs {
  std::string data;
  std::string loss = "squared";
  std::string centering = "normal";
  double center_mean = 0.0, center_sd = 1.0, center_rho = 0.0;
  double alpha = 1.0;
  std::string approx = "mdmc";
  int mc_samples = 100;
  int trunc = 50;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
};

void run_cache(const CacheArgs& args) {
  const LossKind loss_kind = parse_loss_kind(args.loss);
  const Dataset data = load_csv(args.data, loss_kind);
  const int feature_dim =
      loss_kind == LossKind::gaussian_location ? 0 : static_cast<int>(data.feature_dim());
  DpPrior prior;
  prior.alpha = args.alpha;
  prior.centering = make_centering(args.centering, feature_dim, args.center_mean,
                                   args.center_sd, args.center_rho);
  // same stream as the fit command, so a cache reproduces fit's ensemble
  const WeightedEnsemble ensemble =
      build_ensemble(prior, data, args.approx, args.mc_samples, args.trunc,
                     derive_stream(args.seed, 1), args.threads);
  save_ensemble(args.out, ensemble);
  std::size_t atoms = 0;
  for (const WeightedSample& s : ensemble.samples) atoms += s.atoms.size();
  std::cout << "ensemble-cache: wrote " << args.out << " (" << ensemble.samples.size()
            << " samples, " << atoms << " atoms)\n";
}

// ---------------------------------------------------------------------------
// wiring
// ---------------------------------------------------------------------------

void add_threads_flag(CLI::App* cmd, int& threads) {
  cmd->add_option("--threads", threads,
                  "worker threads (results are identical at any count; not echoed in reports)")
      ->check(CLI::Range(1, 64));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "dprobust: distributionally robust estimation under Dirichlet-process ambiguity"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "key=value config file; [section] per subcommand; command-line flags win");

  FitArgs fit;
  CLI::App* fit_cmd = app.add_subcommand(
      "fit", "minimize the robust criterion on a CSV dataset and report the fit");
  fit_cmd->add_option("--data", fit.data, "training CSV (features then a target column)")
      ->required();
  fit_cmd->add_option("--test", fit.test, "held-out CSV for test metrics");
  fit_cmd->add_option("--loss", fit.loss, "squared | logistic | location");
  fit_cmd->add_option("--loss-scale", fit.loss_scale, "multiplier on the raw loss");
  fit_cmd->add_option("--centering", fit.centering, "normal | binary-label | empirical");
  fit_cmd->add_option("--center-mean", fit.center_mean, "centering response mean");
  fit_cmd->add_option("--center-sd", fit.center_sd, "centering response sd");
  fit_cmd->add_option("--center-rho", fit.center_rho,
                      "pairwise feature correlation of the centering draw");
  fit_cmd->add_option("--alpha", fit.alpha, "concentration of the process prior");
  fit_cmd->add_option("--beta", fit.beta, "ambiguity aversion: positive number or 'inf'");
  fit_cmd->add_option("--approx", fit.approx, "sbmc | mdmc | bbmc | empirical");
  fit_cmd->add_option("--mc-samples", fit.mc_samples, "posterior Monte Carlo samples");
  fit_cmd->add_option("--trunc", fit.trunc, "atoms per posterior sample");
  fit_cmd->add_option("--passes", fit.passes, "optimizer passes over the samples");
  fit_cmd->add_option("--step-a", fit.step_a, "step size numerator a in a/(b+sqrt(t))");
  fit_cmd->add_option("--step-b", fit.step_b, "step size offset b in a/(b+sqrt(t))");
  fit_cmd->add_option("--seed", fit.seed, "master seed");
  fit_cmd->add_option("--out", fit.out, "JSON report path")->required();
  fit_cmd->add_option("--trace-csv", fit.trace_csv, "also write the pass trace as CSV");
  add_threads_flag(fit_cmd, fit.threads);
  fit_cmd->callback([&fit] { run_fit(fit); });

  SimulateArgs sim;
  CLI::App* sim_cmd = app.add_subcommand(
      "simulate", "run a synthetic study: robust vs neutral vs plain on paired batches");
  sim_cmd->add_option("--dgp", sim.dgp, "linreg | gauss-outlier | logit")->required();
  sim_cmd->add_option("--replications", sim.replications, "independent batches");
  sim_cmd->add_option("--train-n", sim.train_n, "training rows per batch");
  sim_cmd->add_option("--test-n", sim.test_n, "test rows per batch");
  sim_cmd->add_option("--dim", sim.dim, "feature dimension");
  sim_cmd->add_option("--support", sim.support, "leading unit coefficients");
  sim_cmd->add_option("--noise-sd", sim.noise_sd, "response noise sd (linreg)");
  sim_cmd->add_option("--feature-rho", sim.feature_rho, "pairwise feature correlation");
  sim_cmd->add_option("--clean-n", sim.clean_n, "clean draws per batch (gauss-outlier)");
  sim_cmd->add_option("--outlier-n", sim.outlier_n, "outlier draws per batch");
  sim_cmd->add_option("--outlier-mean", sim.outlier_mean, "outlier component mean");
  sim_cmd->add_option("--outlier-sd", sim.outlier_sd, "outlier component sd");
  sim_cmd->add_option("--alpha", sim.alpha, "concentration of the process prior");
  sim_cmd->add_option("--beta", sim.beta, "ambiguity aversion: positive number or 'inf'");
  sim_cmd->add_option("--approx", sim.approx, "sbmc | mdmc | bbmc | empirical");
  sim_cmd->add_option("--mc-samples", sim.mc_samples, "posterior Monte Carlo samples");
  sim_cmd->add_option("--trunc", sim.trunc, "atoms per posterior sample");
  sim_cmd->add_option("--passes", sim.passes, "optimizer passes over the samples");
  sim_cmd->add_option("--step-a", sim.step_a, "step size numerator");
  sim_cmd->add_option("--step-b", sim.step_b, "step size offset");
  sim_cmd->add_option("--loss-scale", sim.loss_scale, "multiplier on the raw loss");
  sim_cmd->add_option("--baseline-iterations", sim.baseline_iterations,
                      "iteration budget for gradient-based baselines");
  sim_cmd->add_option("--seed", sim.seed, "master seed");
  sim_cmd->add_flag("--paper-scale", sim.paper_scale,
                    "full-size replication counts and Monte Carlo budgets");
  sim_cmd->add_option("--out", sim.out, "JSON report path")->required();
  sim_cmd->add_option("--figure-csv", sim.figure_csv,
                      "bar-chart data path (default: <out>_figure.csv)");
  add_threads_flag(sim_cmd, sim.threads);
  sim_cmd->callback([&sim] { run_simulate(sim); });

  CvArgs cv;
  CLI::App* cv_cmd = app.add_subcommand(
      "cv", "k-fold selection of the concentration for the robust criterion");
  cv_cmd->add_option("--data", cv.data, "training CSV")->required();
  cv_cmd->add_option("--grid", cv.grid, "comma-separated concentration grid")
      ->required()
      ->delimiter(',');
  cv_cmd->add_option("--folds", cv.folds, "number of folds");
  cv_cmd->add_option("--loss", cv.loss, "squared | logistic | location");
  cv_cmd->add_option("--loss-scale", cv.loss_scale, "multiplier on the raw loss");
  cv_cmd->add_option("--centering", cv.centering, "normal | binary-label | empirical");
  cv_cmd->add_option("--center-mean", cv.center_mean, "centering response mean");
  cv_cmd->add_option("--center-sd", cv.center_sd, "centering response sd");
  cv_cmd->add_option("--center-rho", cv.center_rho, "centering feature correlation");
  cv_cmd->add_option("--beta", cv.beta, "ambiguity aversion: positive number or 'inf'");
  cv_cmd->add_option("--approx", cv.approx, "sbmc | mdmc | bbmc | empirical");
  cv_cmd->add_option("--mc-samples", cv.mc_samples, "posterior Monte Carlo samples");
  cv_cmd->add_option("--trunc", cv.trunc, "atoms per posterior sample");
  cv_cmd->add_option("--passes", cv.passes, "optimizer passes per fold fit");
  cv_cmd->add_option("--step-a", cv.step_a, "step size numerator");
  cv_cmd->add_option("--step-b", cv.step_b, "step size offset");
  cv_cmd->add_option("--seed", cv.seed, "master seed");
  cv_cmd->add_option("--out", cv.out, "JSON report path")->required();
  cv_cmd->add_option("--table-csv", cv.table_csv,
                     "per-alpha risk table path (default: <out>_table.csv)");
  add_threads_flag(cv_cmd, cv.threads);
  cv_cmd->callback([&cv] { run_cv(cv); });

  ReplicateArgs rep;
  CLI::App* rep_cmd = app.add_subcommand(
      "replicate", "full real-data protocol: selection, batch fits, comparison table");
  rep_cmd->add_option("--dataset", rep.dataset, "wine | pima | liver")->required();
  rep_cmd->add_option("--data", rep.data, "CSV path (default: data/<dataset>.csv)");
  rep_cmd->add_option("--alpha", rep.alpha,
                      "fixed concentration for the robust arm (skips its selection stage)");
  rep_cmd->add_option("--l1-alpha", rep.l1_alpha,
                      "fixed concentration for the l1 arm (skips its selection stage)");
  rep_cmd->add_option("--beta", rep.beta, "ambiguity aversion: positive number or 'inf'");
  rep_cmd->add_option("--approx", rep.approx, "sbmc | mdmc | bbmc | empirical");
  rep_cmd->add_option("--mc-samples", rep.mc_samples, "posterior Monte Carlo samples");
  rep_cmd->add_option("--trunc", rep.trunc, "atoms per posterior sample");
  rep_cmd->add_option("--passes", rep.passes, "optimizer passes per fit");
  rep_cmd->add_option("--step-a", rep.step_a, "step size numerator");
  rep_cmd->add_option("--step-b", rep.step_b, "step size offset");
  rep_cmd->add_option("--loss-scale", rep.loss_scale, "multiplier on the raw loss");
  rep_cmd->add_option("--baseline-iterations", rep.baseline_iterations,
                      "iteration budget for gradient-based baselines");
  rep_cmd->add_option("--seed", rep.seed, "master seed");
  rep_cmd->add_flag("--paper-scale", rep.paper_scale,
                    "full-size Monte Carlo budgets and pass counts");
  rep_cmd->add_option("--out", rep.out, "JSON report path")->required();
  rep_cmd->add_option("--table-csv", rep.table_csv,
                      "comparison table path (default: <out>_table.csv)");
  add_threads_flag(rep_cmd, rep.threads);
  rep_cmd->callback([&rep] { run_replicate(rep); });

  CacheArgs cache;
  CLI::App* cache_cmd = app.add_subcommand(
      "ensemble-cache", "build the posterior sample ensemble once and store it");
  cache_cmd->add_option("--data", cache.data, "training CSV")->required();
  cache_cmd->add_option("--loss", cache.loss,
                        "squared | logistic | location (controls label mapping)");
  cache_cmd->add_option("--centering", cache.centering, "normal | binary-label | empirical");
  cache_cmd->add_option("--center-mean", cache.center_mean, "centering response mean");
  cache_cmd->add_option("--center-sd", cache.center_sd, "centering response sd");
  cache_cmd->add_option("--center-rho", cache.center_rho, "centering feature correlation");
  cache_cmd->add_option("--alpha", cache.alpha, "concentration of the process prior");
  cache_cmd->add_option("--approx", cache.approx, "sbmc | mdmc | bbmc | empirical");
  cache_cmd->add_option("--mc-samples", cache.mc_samples, "posterior Monte Carlo samples");
  cache_cmd->add_option("--trunc", cache.trunc, "atoms per posterior sample");
  cache_cmd->add_option("--seed", cache.seed, "master seed");
  cache_cmd->add_option("--out", cache.out, "binary cache path")->required();
  add_threads_flag(cache_cmd, cache.threads);
  cache_cmd->callback([&cache] { run_cache(cache); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      return app.exit(e);  // --help and friends
    }
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    std::cerr << "error[config]: " << msg << "\n";
    return 2;
  } catch (const config_error& e) {
    std::cerr << "error[config]: " << e.what() << "\n";
    return 2;
  } catch (const data_error& e) {
    std::cerr << "error[data]: " << e.what() << "\n";
    return 3;
  } catch (const numeric_error& e) {
    std::cerr << "error[numeric]: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error[config]: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error[config]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
