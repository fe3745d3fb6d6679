#include "dpro/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dpro/errors.hpp"

namespace dpro {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\"");
  auto e = s.find_last_not_of(" \t\r\"");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

// Locale-independent numeric parse; strtod would honor the user's decimal
// separator and silently misread files.
double parse_number(const std::string& field, const std::string& path, std::size_t line_no) {
  const std::string t = strip(field);
  double value = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw data_error(path + ":" + std::to_string(line_no) + ": not a number: '" + field + "'");
  return value;
}

}  // namespace

Dataset load_csv(const std::string& path, LossKind kind) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open data file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw data_error(path + ": empty file");
  auto header = split_csv_line(line);
  for (auto& h : header) h = strip(h);
  if (header.empty() || header.back() != "target")
    throw data_error(path + ": last column must be named 'target'");

  Dataset ds;
  ds.feature_names.assign(header.begin(), header.end() - 1);
  const std::size_t ncol = header.size();
  if (kind == LossKind::gaussian_location && ncol != 1)
    throw data_error(path + ": gaussian-location data must have only a 'target' column");

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != ncol)
      throw data_error(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(ncol) + " columns, got " + std::to_string(fields.size()));
    Observation obs;
    obs.features = Vec(static_cast<Eigen::Index>(ncol - 1));
    for (std::size_t j = 0; j + 1 < ncol; ++j)
      obs.features[static_cast<Eigen::Index>(j)] = parse_number(fields[j], path, line_no);
    const double target = parse_number(fields.back(), path, line_no);
    if (kind == LossKind::logistic) {
      if (target != 0.0 && target != 1.0)
        throw data_error(path + ":" + std::to_string(line_no) +
                         ": classification target must be 0 or 1");
      obs.response = target == 0.0 ? -1.0 : 1.0;
    } else {
      obs.response = target;
    }
    ds.rows.push_back(std::move(obs));
  }
  if (ds.rows.empty()) throw data_error(path + ": no data rows");
  return ds;
}

std::pair<Dataset, StandardizeStats> standardize(const Dataset& data, bool include_response) {
  if (data.rows.empty()) throw data_error("standardize: empty dataset");
  const auto n = static_cast<double>(data.size());
  const Eigen::Index d = data.feature_dim();

  StandardizeStats stats;
  stats.feature_mean.assign(static_cast<std::size_t>(d), 0.0);
  stats.feature_sd.assign(static_cast<std::size_t>(d), 0.0);
  stats.response_standardized = include_response;

  for (const auto& row : data.rows)
    for (Eigen::Index j = 0; j < d; ++j)
      stats.feature_mean[static_cast<std::size_t>(j)] += row.features[j];
  for (auto& m : stats.feature_mean) m /= n;

  for (const auto& row : data.rows)
    for (Eigen::Index j = 0; j < d; ++j) {
      const double c = row.features[j] - stats.feature_mean[static_cast<std::size_t>(j)];
      stats.feature_sd[static_cast<std::size_t>(j)] += c * c;
    }
  for (Eigen::Index j = 0; j < d; ++j) {
    auto& sd = stats.feature_sd[static_cast<std::size_t>(j)];
    sd = std::sqrt(sd / n);
    if (sd <= 0.0) {
      const auto& name = static_cast<std::size_t>(j) < data.feature_names.size()
                             ? data.feature_names[static_cast<std::size_t>(j)]
                             : "column " + std::to_string(j);
      throw data_error("standardize: zero-variance column '" + name + "'");
    }
  }

  if (include_response) {
    double m = 0.0;
    for (const auto& row : data.rows) m += row.response;
    m /= n;
    double v = 0.0;
    for (const auto& row : data.rows) v += (row.response - m) * (row.response - m);
    const double sd = std::sqrt(v / n);
    if (sd <= 0.0) throw data_error("standardize: zero-variance column 'target'");
    stats.response_mean = m;
    stats.response_sd = sd;
  }

  return {standardize_apply(data, stats), stats};
}

Dataset standardize_apply(const Dataset& data, const StandardizeStats& stats) {
  if (static_cast<std::size_t>(data.feature_dim()) != stats.feature_mean.size())
    throw data_error("standardize_apply: stats fitted on a different feature dimension");
  Dataset out = data;
  const Eigen::Index d = data.feature_dim();
  for (auto& row : out.rows) {
    for (Eigen::Index j = 0; j < d; ++j)
      row.features[j] = (row.features[j] - stats.feature_mean[static_cast<std::size_t>(j)]) /
                        stats.feature_sd[static_cast<std::size_t>(j)];
    if (stats.response_standardized)
      row.response = (row.response - stats.response_mean) / stats.response_sd;
  }
  return out;
}

Eigen::MatrixXd feature_matrix(const Dataset& data) {
  const auto n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index d = data.feature_dim();
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) x.row(i) = data.rows[static_cast<std::size_t>(i)].features;
  return x;
}

Vec response_vector(const Dataset& data) {
  const auto n = static_cast<Eigen::Index>(data.size());
  Vec y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = data.rows[static_cast<std::size_t>(i)].response;
  return y;
}

}  // namespace dpro
