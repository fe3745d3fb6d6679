#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dpro/loss.hpp"

namespace dpro {

// A dataset is a list of observations with a shared feature dimension,
// plus the column names carried through from CSV ingestion (synthetic data
// gets generated names). Location-style datasets have zero feature columns.
struct Dataset {
  std::vector<Observation> rows;
  std::vector<std::string> feature_names;

  std::size_t size() const { return rows.size(); }
  Eigen::Index feature_dim() const {
    return rows.empty() ? static_cast<Eigen::Index>(feature_names.size())
                        : rows.front().features.size();
  }
};

// Reads a CSV with a header row: feature columns followed by a `target`
// column. For the logistic loss the target must be 0/1 and is mapped to
// -1/+1; for other losses it is used as-is. A file with only a `target`
// column is a location-style dataset. Throws data_error on malformed input.
Dataset load_csv(const std::string& path, LossKind kind);

// Column-wise z-scoring statistics fitted on a training set and reusable on
// held-out data (held-out columns are shifted/scaled by the training stats,
// never re-centered on themselves).
struct StandardizeStats {
  std::vector<double> feature_mean, feature_sd;
  bool response_standardized = false;
  double response_mean = 0.0, response_sd = 1.0;
};

// Fits stats on `data` and returns the standardized copy. A zero-variance
// column is an error naming the offending column. Population (1/n) variance.
std::pair<Dataset, StandardizeStats> standardize(const Dataset& data,
                                                 bool include_response = false);

// Applies previously fitted stats.
Dataset standardize_apply(const Dataset& data, const StandardizeStats& stats);

// Design-matrix view used by the closed-form solvers.
Eigen::MatrixXd feature_matrix(const Dataset& data);
Vec response_vector(const Dataset& data);

}  // namespace dpro
