#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dpro/optimizer.hpp"

namespace dpro {

// ---------------------------------------------------------------------------
// Synthetic data-generating processes
// ---------------------------------------------------------------------------

enum class DgpKind { sparse_linreg, gaussian_outliers, sparse_logit };

struct DgpSpec {
  DgpKind kind = DgpKind::sparse_linreg;
  // regression/classification family
  int n = 100;
  int d = 90;
  int s = 5;           // leading coefficients equal to 1, the rest 0
  double rho = 0.3;    // constant pairwise feature covariance
  double sigma = 0.5;  // response noise sd (sparse_linreg)
  // location-with-outliers family
  int n_clean = 10;
  int n_out = 3;
  double outlier_mean = 5.0;
  double outlier_sd = 1.0;
};

// Rows: x ~ MVN(0, compound symmetry rho), y = sum of the first s features
// plus sigma * N(0,1) noise.
Dataset gen_sparse_linreg(const DgpSpec& spec, RngStream& stream);

// Rows: n_clean draws from N(0,1) followed by n_out draws from
// N(outlier_mean, outlier_sd^2); location-style (no features).
Dataset gen_gaussian_outliers(const DgpSpec& spec, RngStream& stream);

// Rows: x as in sparse_linreg, y in {+1,-1} with P(+1|x) = logistic(x'a).
Dataset gen_sparse_logit(const DgpSpec& spec, RngStream& stream);

Dataset gen_dataset(const DgpSpec& spec, RngStream& stream);

// The coefficient vector the generators use: s ones then zeros, or the
// single zero that is the location family's generating parameter.
Vec dgp_true_coef(const DgpSpec& spec);

// ---------------------------------------------------------------------------
// Metrics and replication reports
// ---------------------------------------------------------------------------

struct MetricRow {
  // conventional unscaled risk: RMSE (squared), mean logistic loss
  // (logistic), mean unit-variance Gaussian NLL (location)
  double test_risk = 0.0;
  // mean of the configured loss including its scale factor — the metric the
  // real-data comparison tables report
  double mean_loss = 0.0;
  std::optional<double> coef_l2_dist;  // |theta - true|_2 when truth is known
  double coef_l2_norm = 0.0;
};

MetricRow compute_metrics(const Vec& theta, const Dataset& test, const LossSpec& loss,
                          const std::optional<Vec>& true_coef = std::nullopt);

struct ReplicationReport {
  std::vector<MetricRow> per_batch;
  MetricRow mean;
  MetricRow std_dev;  // population standard deviation across batches
};

ReplicationReport summarize_batches(std::vector<MetricRow> rows);

// ---------------------------------------------------------------------------
// Fitting: the DP-robust criterion and the comparison baselines
// ---------------------------------------------------------------------------

// Everything needed to fit the robust criterion on one training set.
struct TrainSettings {
  ApproxScheme scheme = ApproxScheme::mdmc;
  int mc_samples = 100;  // posterior samples N
  int trunc = 50;        // truncation / atom budget T
  double alpha = 1.0;
  CenteringSpec centering;
  PhiSpec aversion;  // identity unless set
  LossSpec loss;
  SgdConfig sgd;  // theta0 may be left empty: zeros of the data dimension
  int threads = 1;
};

// Build the posterior ensemble from `stream` and minimize the robust
// criterion; returns the final iterate. Aborted runs raise numeric_error.
Vec fit_robust(const Dataset& train, const TrainSettings& settings, RngStream stream);

// Closed-form ridge for (1/n)|y - X theta|^2 + lambda |theta|^2.
Vec ridge_oracle(const Dataset& data, double lambda);

// Cyclic coordinate descent with soft thresholding for
// (1/(2n))|y - X theta|^2 + lambda |theta|_1, iterated to a 1e-8
// coordinate-update fixed point.
Vec lasso_oracle(const Dataset& data, double lambda);

// Fixed-step gradient methods for mean logistic loss with an optional l2 or
// l1 penalty; `iterations` caps the run (the unpenalized problem need not
// have a finite minimizer on separable data, so the budget is the contract).
Vec logit_fit(const Dataset& data, double l2_penalty, int iterations);
Vec logit_l1_fit(const Dataset& data, double l1_penalty, int iterations);

// What the non-robust arms of a study mean for the data at hand.
enum class BaselineKind {
  ols,            // ridge with lambda 0
  ridge,          // closed form, lambda = alpha/n (the neutral criterion arm)
  lasso,          // l1 linear regression at `penalty`
  logit_l2,       // penalized logistic at `penalty`
  logit_l1,       // l1 logistic at `penalty`
  logit_plain,    // unpenalized logistic, iteration-budgeted
  location_mle,   // sample mean
  location_pull,  // analytic neutral location fit (sample plus alpha prior means)
};

Vec fit_baseline(BaselineKind kind, const Dataset& train, double penalty, int iterations,
                 double alpha, double prior_mean);

// Penalty strength a concentration-style grid value implies for a baseline
// on an n-row training set. Logistic penalties scale with 1/n (the usual
// C = 1/alpha convention); the lasso penalty is absolute; ridge reuses
// ridge_lambda. Kinds without a penalty map to 0.
double baseline_penalty(BaselineKind kind, double alpha, std::size_t n);

// ---------------------------------------------------------------------------
// Cross-validation and batch replication
// ---------------------------------------------------------------------------

// Balanced random partition of {0..n-1} into `folds` index blocks.
std::vector<std::vector<std::size_t>> make_folds(std::size_t n, int folds, RngStream& stream);

// Uniform random permutation of the rows (train/test splitting helper).
Dataset shuffle_rows(const Dataset& data, RngStream& stream);

struct CvResult {
  double best_alpha = 0.0;
  std::vector<double> alphas;
  std::vector<double> risks;  // mean out-of-fold loss per grid value
};

// For each grid alpha: fit the robust criterion on k-1 folds, score the mean
// configured loss on the held-out fold, average across folds; returns the
// argmin (first hit wins on ties within 1e-10).
CvResult kfold_cv(const Dataset& data, int folds, const std::vector<double>& alpha_grid,
                  const TrainSettings& settings, RngStream stream);

// Same protocol for a baseline arm (no posterior sampling). Grid entries
// are concentration-style values translated per fit by baseline_penalty.
CvResult kfold_cv_baseline(const Dataset& data, int folds, const std::vector<double>& grid,
                           BaselineKind kind, const LossSpec& loss, int iterations,
                           RngStream stream);

enum class FitMethod { robust, regularized, unregularized };

struct ReplicateSettings {
  TrainSettings robust;
  BaselineKind regularized = BaselineKind::ridge;
  BaselineKind unregularized = BaselineKind::ols;
  double penalty = 0.0;  // strength for the regularized baseline
  int baseline_iterations = 2000;
  std::optional<Vec> true_coef;
  int threads = 1;
};

// Fixed-pool protocol (real-data studies): split `pool` into `batches`
// disjoint random batches of `batch_size`, fit the method on each batch,
// score every fit on the common `test` set.
ReplicationReport batch_replicate(const Dataset& pool, const Dataset& test, int batches,
                                  int batch_size, FitMethod method,
                                  const ReplicateSettings& settings, RngStream stream);

// Fresh-simulation protocol: per batch, generate a training set and a test
// set of `test_size` from the DGP, fit, score.
ReplicationReport batch_replicate(const DgpSpec& dgp, int test_size, int batches,
                                  FitMethod method, const ReplicateSettings& settings,
                                  RngStream stream);

}  // namespace dpro
