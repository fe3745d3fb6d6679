#include "dpro/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

#include "dpro/errors.hpp"
#include "dpro/parallel.hpp"

namespace dpro {

namespace {

void check_covariate_spec(const DgpSpec& spec) {
  if (spec.n < 1) throw std::invalid_argument("sample size must be positive");
  if (spec.d < 1) throw std::invalid_argument("feature dimension must be positive");
  if (spec.s < 0 || spec.s > spec.d) {
    throw std::invalid_argument("support size must lie in [0, d]");
  }
  if (!(spec.rho >= 0.0 && spec.rho < 1.0)) {
    throw std::invalid_argument("feature correlation must lie in [0, 1)");
  }
}

Vec draw_features(const DgpSpec& spec, RngStream& stream) {
  const std::vector<double> x = sample_mvn_compound_symmetry(stream, spec.d, spec.rho);
  Vec out(spec.d);
  for (int k = 0; k < spec.d; ++k) out[k] = x[static_cast<std::size_t>(k)];
  return out;
}

std::vector<std::string> generated_names(int d) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(d));
  for (int k = 1; k <= d; ++k) names.push_back("x" + std::to_string(k));
  return names;
}

double support_sum(const Vec& x, int s) {
  double acc = 0.0;
  for (int k = 0; k < s; ++k) acc += x[k];
  return acc;
}

}  // namespace

Dataset gen_sparse_linreg(const DgpSpec& spec, RngStream& stream) {
  if (spec.kind != DgpKind::sparse_linreg) {
    throw std::invalid_argument("generator/kind mismatch (expected sparse_linreg)");
  }
  check_covariate_spec(spec);
  if (!(spec.sigma >= 0.0)) throw std::invalid_argument("noise sd must be nonnegative");
  Dataset data;
  data.feature_names = generated_names(spec.d);
  data.rows.reserve(static_cast<std::size_t>(spec.n));
  for (int i = 0; i < spec.n; ++i) {
    Observation obs;
    obs.features = draw_features(spec, stream);
    obs.response = support_sum(obs.features, spec.s) + spec.sigma * stream.next_normal();
    data.rows.push_back(std::move(obs));
  }
  return data;
}

Dataset gen_gaussian_outliers(const DgpSpec& spec, RngStream& stream) {
  if (spec.kind != DgpKind::gaussian_outliers) {
    throw std::invalid_argument("generator/kind mismatch (expected gaussian_outliers)");
  }
  if (spec.n_clean < 0 || spec.n_out < 0 || spec.n_clean + spec.n_out < 1) {
    throw std::invalid_argument("outlier mixture needs nonnegative counts, at least one draw");
  }
  if (!(spec.outlier_sd > 0.0)) throw std::invalid_argument("outlier sd must be positive");
  Dataset data;
  data.rows.reserve(static_cast<std::size_t>(spec.n_clean + spec.n_out));
  for (int i = 0; i < spec.n_clean; ++i) {
    Observation obs;
    obs.response = stream.next_normal();
    data.rows.push_back(std::move(obs));
  }
  for (int i = 0; i < spec.n_out; ++i) {
    Observation obs;
    obs.response = spec.outlier_mean + spec.outlier_sd * stream.next_normal();
    data.rows.push_back(std::move(obs));
  }
  return data;
}

Dataset gen_sparse_logit(const DgpSpec& spec, RngStream& stream) {
  if (spec.kind != DgpKind::sparse_logit) {
    throw std::invalid_argument("generator/kind mismatch (expected sparse_logit)");
  }
  check_covariate_spec(spec);
  Dataset data;
  data.feature_names = generated_names(spec.d);
  data.rows.reserve(static_cast<std::size_t>(spec.n));
  for (int i = 0; i < spec.n; ++i) {
    Observation obs;
    obs.features = draw_features(spec, stream);
    const double margin = support_sum(obs.features, spec.s);
    const double p = 1.0 / (1.0 + std::exp(-margin));
    obs.response = stream.next_uniform() < p ? 1.0 : -1.0;
    data.rows.push_back(std::move(obs));
  }
  return data;
}

Dataset gen_dataset(const DgpSpec& spec, RngStream& stream) {
  switch (spec.kind) {
    case DgpKind::sparse_linreg:
      return gen_sparse_linreg(spec, stream);
    case DgpKind::gaussian_outliers:
      return gen_gaussian_outliers(spec, stream);
    case DgpKind::sparse_logit:
      return gen_sparse_logit(spec, stream);
  }
  throw std::invalid_argument("unknown data-generating process");
}

Vec dgp_true_coef(const DgpSpec& spec) {
  if (spec.kind == DgpKind::gaussian_outliers) {
    Vec a = Vec::Zero(1);
    return a;  // the generating location is 0
  }
  Vec a = Vec::Zero(spec.d);
  for (int k = 0; k < spec.s; ++k) a[k] = 1.0;
  return a;
}

MetricRow compute_metrics(const Vec& theta, const Dataset& test, const LossSpec& loss,
                          const std::optional<Vec>& true_coef) {
  if (test.size() == 0) throw std::invalid_argument("compute_metrics: empty test set");
  const std::size_t n = test.size();
  std::vector<double> scaled(n), raw(n);
  LossSpec unit = loss;
  unit.scale = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = loss_eval(loss, theta, test.rows[i]);
    raw[i] = loss_eval(unit, theta, test.rows[i]);
  }
  MetricRow row;
  row.mean_loss = pairwise_sum(scaled) / static_cast<double>(n);
  const double mean_raw = pairwise_sum(raw) / static_cast<double>(n);
  switch (loss.kind) {
    case LossKind::squared:
      row.test_risk = std::sqrt(mean_raw);
      break;
    case LossKind::logistic:
      row.test_risk = mean_raw;
      break;
    case LossKind::gaussian_location:
      // unit-variance Gaussian negative log-likelihood
      row.test_risk = 0.5 * std::log(2.0 * std::numbers::pi) + 0.5 * mean_raw;
      break;
  }
  if (true_coef) {
    if (true_coef->size() != theta.size()) {
      throw std::invalid_argument("compute_metrics: truth/estimate dimension mismatch");
    }
    row.coef_l2_dist = (theta - *true_coef).norm();
  }
  row.coef_l2_norm = theta.norm();
  return row;
}

ReplicationReport summarize_batches(std::vector<MetricRow> rows) {
  if (rows.empty()) throw std::invalid_argument("summarize_batches: no batch rows");
  const double n = static_cast<double>(rows.size());
  const bool have_dist =
      std::all_of(rows.begin(), rows.end(), [](const MetricRow& r) { return r.coef_l2_dist.has_value(); });

  auto column_mean_std = [&](auto getter) -> std::pair<double, double> {
    double mean = 0.0;
    for (const auto& r : rows) mean += getter(r) / n;
    double var = 0.0;
    for (const auto& r : rows) {
      const double d = getter(r) - mean;
      var += d * d / n;  // population variance, matching the tables' convention
    }
    return {mean, std::sqrt(var)};
  };

  ReplicationReport report;
  auto [risk_m, risk_s] = column_mean_std([](const MetricRow& r) { return r.test_risk; });
  auto [loss_m, loss_s] = column_mean_std([](const MetricRow& r) { return r.mean_loss; });
  auto [norm_m, norm_s] = column_mean_std([](const MetricRow& r) { return r.coef_l2_norm; });
  report.mean.test_risk = risk_m;
  report.std_dev.test_risk = risk_s;
  report.mean.mean_loss = loss_m;
  report.std_dev.mean_loss = loss_s;
  report.mean.coef_l2_norm = norm_m;
  report.std_dev.coef_l2_norm = norm_s;
  if (have_dist) {
    auto [dist_m, dist_s] = column_mean_std([](const MetricRow& r) { return *r.coef_l2_dist; });
    report.mean.coef_l2_dist = dist_m;
    report.std_dev.coef_l2_dist = dist_s;
  }
  report.per_batch = std::move(rows);
  return report;
}

Vec fit_robust(const Dataset& train, const TrainSettings& settings, RngStream stream) {
  DpPrior prior;
  prior.alpha = settings.alpha;
  prior.centering = settings.centering;

  WeightedEnsemble ensemble;
  RngStream ensemble_stream = stream.child(0);
  switch (settings.scheme) {
    case ApproxScheme::sbmc:
      ensemble = sbmc_ensemble(prior, train, settings.mc_samples, settings.trunc, ensemble_stream,
                               settings.threads);
      break;
    case ApproxScheme::mdmc:
      ensemble = mdmc_ensemble(prior, train, settings.mc_samples, settings.trunc, ensemble_stream,
                               settings.threads);
      break;
    case ApproxScheme::bbmc:
      ensemble = bbmc_ensemble(train, settings.mc_samples, ensemble_stream, settings.threads);
      break;
    case ApproxScheme::exact_empirical:
      ensemble = exact_empirical_ensemble(train);
      break;
  }

  CriterionContext ctx(ensemble, settings.loss, settings.aversion);
  SgdConfig sgd = settings.sgd;
  sgd.threads = settings.threads;
  const Eigen::Index dim =
      settings.loss.kind == LossKind::gaussian_location
          ? 1
          : static_cast<Eigen::Index>(train.feature_dim());
  if (sgd.theta0.size() == 0) sgd.theta0 = Vec::Zero(dim);
  RngStream seed_stream = stream.child(1);
  sgd.seed ^= seed_stream.next_u64();  // distinct visiting orders per training run

  const RunTrace trace = sgd_minimize(ctx, sgd);
  if (trace.aborted) {
    throw numeric_error("robust fit aborted: " + trace.abort_reason);
  }
  return trace.final_theta;
}

Vec ridge_oracle(const Dataset& data, double lambda) {
  if (data.size() == 0) throw std::invalid_argument("ridge_oracle: empty dataset");
  if (data.feature_dim() == 0) throw std::invalid_argument("ridge_oracle: dataset has no features");
  if (!(lambda >= 0.0)) throw std::invalid_argument("ridge_oracle: negative penalty");
  const Eigen::MatrixXd x = feature_matrix(data);
  const Vec y = response_vector(data);
  const double n = static_cast<double>(data.size());
  const Eigen::MatrixXd a =
      x.transpose() * x / n + lambda * Eigen::MatrixXd::Identity(x.cols(), x.cols());
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) {
    throw numeric_error("ridge_oracle: singular normal equations (rank-deficient design)");
  }
  return lu.solve(x.transpose() * y / n);
}

Vec lasso_oracle(const Dataset& data, double lambda) {
  if (data.size() == 0) throw std::invalid_argument("lasso_oracle: empty dataset");
  if (data.feature_dim() == 0) throw std::invalid_argument("lasso_oracle: dataset has no features");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lasso_oracle: negative penalty");
  const Eigen::MatrixXd x = feature_matrix(data);
  const Vec y = response_vector(data);
  const double n = static_cast<double>(data.size());
  const Eigen::Index d = x.cols();

  Vec col_scale(d);  // (1/n) |x_k|^2
  for (Eigen::Index k = 0; k < d; ++k) col_scale[k] = x.col(k).squaredNorm() / n;

  Vec theta = Vec::Zero(d);
  Vec residual = y;  // y - X theta
  const int max_sweeps = 100000;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_delta = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      if (col_scale[k] == 0.0) continue;  // all-zero column stays at zero
      const double rho = x.col(k).dot(residual) / n + col_scale[k] * theta[k];
      const double soft = std::max(0.0, std::abs(rho) - lambda);
      const double updated = (rho > 0.0 ? soft : -soft) / col_scale[k];
      const double delta = updated - theta[k];
      if (delta != 0.0) {
        residual -= delta * x.col(k);
        theta[k] = updated;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    if (max_delta < 1e-8) return theta;
  }
  throw numeric_error("lasso_oracle: coordinate descent did not reach its fixed point");
}

namespace {

// Lipschitz constant of the mean-logistic-loss gradient: lambda_max(X'X/n)/4.
double logistic_lipschitz(const Eigen::MatrixXd& x) {
  const double n = static_cast<double>(x.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(x.transpose() * x / n);
  return std::max(eig.eigenvalues().maxCoeff(), 1e-12) / 4.0;
}

Vec mean_logistic_grad(const Dataset& data, const Vec& theta) {
  LossSpec unit{LossKind::logistic, 1.0, {}};
  Vec g = Vec::Zero(theta.size());
  const double inv_n = 1.0 / static_cast<double>(data.size());
  for (const Observation& obs : data.rows) loss_grad_accum(unit, theta, obs, inv_n, g);
  return g;
}

}  // namespace

Vec logit_fit(const Dataset& data, double l2_penalty, int iterations) {
  if (data.size() == 0) throw std::invalid_argument("logit_fit: empty dataset");
  if (!(l2_penalty >= 0.0)) throw std::invalid_argument("logit_fit: negative penalty");
  if (iterations < 1) throw std::invalid_argument("logit_fit: iteration budget must be positive");
  const Eigen::MatrixXd x = feature_matrix(data);
  const double step = 1.0 / (logistic_lipschitz(x) + l2_penalty);
  Vec theta = Vec::Zero(x.cols());
  for (int it = 0; it < iterations; ++it) {
    const Vec g = mean_logistic_grad(data, theta) + l2_penalty * theta;
    theta -= step * g;
    if (g.lpNorm<Eigen::Infinity>() < 1e-12) break;
  }
  return theta;
}

Vec logit_l1_fit(const Dataset& data, double l1_penalty, int iterations) {
  if (data.size() == 0) throw std::invalid_argument("logit_l1_fit: empty dataset");
  if (!(l1_penalty >= 0.0)) throw std::invalid_argument("logit_l1_fit: negative penalty");
  if (iterations < 1) {
    throw std::invalid_argument("logit_l1_fit: iteration budget must be positive");
  }
  const Eigen::MatrixXd x = feature_matrix(data);
  const double step = 1.0 / logistic_lipschitz(x);
  const double threshold = step * l1_penalty;
  Vec theta = Vec::Zero(x.cols());
  for (int it = 0; it < iterations; ++it) {
    const Vec forward = theta - step * mean_logistic_grad(data, theta);
    Vec updated(theta.size());
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      const double soft = std::max(0.0, std::abs(forward[k]) - threshold);
      updated[k] = forward[k] > 0.0 ? soft : -soft;
    }
    const double move = (updated - theta).lpNorm<Eigen::Infinity>();
    theta = updated;
    if (move < 1e-13) break;
  }
  return theta;
}

Vec fit_baseline(BaselineKind kind, const Dataset& train, double penalty, int iterations,
                 double alpha, double prior_mean) {
  switch (kind) {
    case BaselineKind::ols:
      return ridge_oracle(train, 0.0);
    case BaselineKind::ridge:
      return ridge_oracle(train, ridge_lambda(alpha, train.size()));
    case BaselineKind::lasso:
      return lasso_oracle(train, penalty);
    case BaselineKind::logit_l2:
      return logit_fit(train, penalty, iterations);
    case BaselineKind::logit_l1:
      return logit_l1_fit(train, penalty, iterations);
    case BaselineKind::logit_plain:
      return logit_fit(train, 0.0, iterations);
    case BaselineKind::location_mle: {
      if (train.size() == 0) throw std::invalid_argument("location fit: empty dataset");
      double acc = 0.0;
      for (const auto& obs : train.rows) acc += obs.response;
      return Vec::Constant(1, acc / static_cast<double>(train.size()));
    }
    case BaselineKind::location_pull: {
      if (train.size() == 0) throw std::invalid_argument("location fit: empty dataset");
      if (!(alpha >= 0.0)) throw std::invalid_argument("location fit: negative concentration");
      double acc = 0.0;
      for (const auto& obs : train.rows) acc += obs.response;
      return Vec::Constant(1, (acc + alpha * prior_mean) /
                                  (static_cast<double>(train.size()) + alpha));
    }
  }
  throw std::invalid_argument("unknown baseline kind");
}

double baseline_penalty(BaselineKind kind, double alpha, std::size_t n) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("baseline_penalty: negative concentration");
  switch (kind) {
    case BaselineKind::logit_l1:
    case BaselineKind::logit_l2:
      if (n == 0) throw std::invalid_argument("baseline_penalty: empty training set");
      return alpha / static_cast<double>(n);
    case BaselineKind::lasso:
      return alpha;
    case BaselineKind::ridge:
      return ridge_lambda(alpha, n);
    case BaselineKind::ols:
    case BaselineKind::logit_plain:
    case BaselineKind::location_mle:
    case BaselineKind::location_pull:
      return 0.0;
  }
  throw std::invalid_argument("unknown baseline kind");
}

Dataset shuffle_rows(const Dataset& data, RngStream& stream) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle_indices(order, stream);
  Dataset out;
  out.feature_names = data.feature_names;
  out.rows.reserve(data.size());
  for (std::size_t idx : order) out.rows.push_back(data.rows[idx]);
  return out;
}

std::vector<std::vector<std::size_t>> make_folds(std::size_t n, int folds, RngStream& stream) {
  if (folds < 2) throw std::invalid_argument("make_folds: need at least 2 folds");
  if (n < static_cast<std::size_t>(folds)) {
    throw std::invalid_argument("make_folds: fewer rows than folds");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle_indices(order, stream);
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(folds));
  const std::size_t q = n / static_cast<std::size_t>(folds);
  const std::size_t r = n % static_cast<std::size_t>(folds);
  std::size_t cursor = 0;
  for (std::size_t f = 0; f < out.size(); ++f) {
    const std::size_t size = q + (f < r ? 1 : 0);
    out[f].assign(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                  order.begin() + static_cast<std::ptrdiff_t>(cursor + size));
    cursor += size;
  }
  return out;
}

namespace {

Dataset subset(const Dataset& data, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.feature_names = data.feature_names;
  out.rows.reserve(indices.size());
  for (std::size_t idx : indices) out.rows.push_back(data.rows[idx]);
  return out;
}

double mean_loss_on(const Dataset& eval, const LossSpec& loss, const Vec& theta) {
  std::vector<double> terms(eval.size());
  for (std::size_t i = 0; i < eval.size(); ++i) terms[i] = loss_eval(loss, theta, eval.rows[i]);
  return pairwise_sum(terms) / static_cast<double>(eval.size());
}

// Shared k-fold driver: `fit(train, alpha, task_stream)` produces a
// parameter vector for one (grid value, fold) pair. The fit stream depends
// on the fold only, not the grid position: every grid value sees the same
// randomness per fold (common random numbers), and duplicate grid values
// reproduce each other's risks exactly.
template <typename FitFn>
CvResult cv_drive(const Dataset& data, int folds, const std::vector<double>& grid,
                  const LossSpec& loss, int threads, RngStream stream, FitFn&& fit) {
  if (grid.empty()) throw std::invalid_argument("cross-validation grid is empty");
  RngStream fold_stream = stream.child(0);
  const auto assignment = make_folds(data.size(), folds, fold_stream);

  const std::size_t n_tasks = grid.size() * assignment.size();
  std::vector<double> task_risk(n_tasks);
  parallel_for(n_tasks, threads, [&](std::size_t task) {
    const std::size_t a = task / assignment.size();
    const std::size_t f = task % assignment.size();
    std::vector<std::size_t> train_idx;
    for (std::size_t g = 0; g < assignment.size(); ++g) {
      if (g == f) continue;
      train_idx.insert(train_idx.end(), assignment[g].begin(), assignment[g].end());
    }
    const Dataset train = subset(data, train_idx);
    const Dataset held_out = subset(data, assignment[f]);
    const Vec theta = fit(train, grid[a], stream.child(2 + f));
    task_risk[task] = mean_loss_on(held_out, loss, theta);
  });

  CvResult result;
  result.alphas = grid;
  result.risks.resize(grid.size());
  for (std::size_t a = 0; a < grid.size(); ++a) {
    double acc = 0.0;
    for (std::size_t f = 0; f < assignment.size(); ++f) {
      acc += task_risk[a * assignment.size() + f];
    }
    result.risks[a] = acc / static_cast<double>(assignment.size());
  }
  std::size_t best = 0;
  for (std::size_t a = 1; a < grid.size(); ++a) {
    if (result.risks[a] < result.risks[best] - 1e-10) best = a;  // first hit wins ties
  }
  result.best_alpha = grid[best];
  return result;
}

}  // namespace

CvResult kfold_cv(const Dataset& data, int folds, const std::vector<double>& alpha_grid,
                  const TrainSettings& settings, RngStream stream) {
  TrainSettings task_settings = settings;
  task_settings.threads = 1;  // parallelism lives at the task level
  return cv_drive(data, folds, alpha_grid, settings.loss, settings.threads, stream,
                  [&task_settings](const Dataset& train, double alpha, RngStream s) {
                    TrainSettings local = task_settings;
                    local.alpha = alpha;
                    return fit_robust(train, local, s);
                  });
}

CvResult kfold_cv_baseline(const Dataset& data, int folds, const std::vector<double>& grid,
                           BaselineKind kind, const LossSpec& loss, int iterations,
                           RngStream stream) {
  return cv_drive(data, folds, grid, loss, 1, stream,
                  [&](const Dataset& train, double value, RngStream) {
                    return fit_baseline(kind, train, baseline_penalty(kind, value, train.size()),
                                        iterations, value, 0.0);
                  });
}

namespace {

Vec fit_method(FitMethod method, const Dataset& train, const ReplicateSettings& settings,
               RngStream stream) {
  switch (method) {
    case FitMethod::robust: {
      TrainSettings local = settings.robust;
      local.threads = 1;
      return fit_robust(train, local, stream);
    }
    case FitMethod::regularized:
      return fit_baseline(settings.regularized, train, settings.penalty,
                          settings.baseline_iterations, settings.robust.alpha,
                          settings.robust.centering.response_mean);
    case FitMethod::unregularized:
      return fit_baseline(settings.unregularized, train, 0.0, settings.baseline_iterations, 0.0,
                          0.0);
  }
  throw std::invalid_argument("unknown fit method");
}

}  // namespace

ReplicationReport batch_replicate(const Dataset& pool, const Dataset& test, int batches,
                                  int batch_size, FitMethod method,
                                  const ReplicateSettings& settings, RngStream stream) {
  if (batches < 1 || batch_size < 1) {
    throw std::invalid_argument("batch_replicate: batches and batch size must be positive");
  }
  if (static_cast<std::size_t>(batches) * static_cast<std::size_t>(batch_size) > pool.size()) {
    throw std::invalid_argument("batch_replicate: pool has too few rows for the requested split");
  }
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  RngStream split_stream = stream.child(0);
  shuffle_indices(order, split_stream);

  std::vector<MetricRow> rows(static_cast<std::size_t>(batches));
  parallel_for(static_cast<std::size_t>(batches), settings.threads, [&](std::size_t b) {
    const std::vector<std::size_t> batch_idx(
        order.begin() + static_cast<std::ptrdiff_t>(b * static_cast<std::size_t>(batch_size)),
        order.begin() + static_cast<std::ptrdiff_t>((b + 1) * static_cast<std::size_t>(batch_size)));
    const Dataset train = subset(pool, batch_idx);
    const Vec theta = fit_method(method, train, settings, stream.child(1 + b));
    rows[b] = compute_metrics(theta, test, settings.robust.loss, settings.true_coef);
  });
  return summarize_batches(std::move(rows));
}

ReplicationReport batch_replicate(const DgpSpec& dgp, int test_size, int batches,
                                  FitMethod method, const ReplicateSettings& settings,
                                  RngStream stream) {
  if (batches < 1) throw std::invalid_argument("batch_replicate: batches must be positive");
  if (test_size < 1) throw std::invalid_argument("batch_replicate: test size must be positive");

  std::vector<MetricRow> rows(static_cast<std::size_t>(batches));
  parallel_for(static_cast<std::size_t>(batches), settings.threads, [&](std::size_t b) {
    // the batch's streams depend only on the batch index, so every method
    // sees the same simulated data — the comparisons are paired
    RngStream batch_stream = stream.child(1 + b);
    RngStream train_stream = batch_stream.child(0);
    RngStream test_stream = batch_stream.child(1);
    const Dataset train = gen_dataset(dgp, train_stream);
    DgpSpec test_spec = dgp;
    if (test_spec.kind == DgpKind::gaussian_outliers) {
      // test on the clean data-generating process only
      test_spec.n_clean = test_size;
      test_spec.n_out = 0;
    } else {
      test_spec.n = test_size;
    }
    const Dataset test = gen_dataset(test_spec, test_stream);
    const Vec theta = fit_method(method, train, settings, batch_stream.child(2));
    rows[b] = compute_metrics(theta, test, settings.robust.loss, settings.true_coef);
  });
  return summarize_batches(std::move(rows));
}

}  // namespace dpro
