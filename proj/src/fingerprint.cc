#include "wasmfp/fingerprint.h"

#include <cmath>
#include <fstream>

#include "wasmfp/catalog.h"
#include "wasmfp/errors.h"

namespace wasmfp {

FingerprintVector::FingerprintVector(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]) || values_[i] < 0.0)
      throw DataError("fingerprint entry " + std::to_string(i) + " is not a finite non-negative value");
  }
}

std::string Label::to_string() const {
  return browser + "/" + os + "/" + device_class;
}

Json to_json(const Label& label) {
  Json j = {{"browser", label.browser}, {"os", label.os}, {"device_class", label.device_class}};
  for (const auto& [key, value] : label.extra.items())
    j[key] = value;
  return j;
}

Label label_from_json(const Json& j) {
  if (!j.is_object())
    throw DataError("label must be a JSON object");
  Label label;
  for (const auto& [key, value] : j.items()) {
    if (key == "browser")
      label.browser = value.get<std::string>();
    else if (key == "os")
      label.os = value.get<std::string>();
    else if (key == "device_class")
      label.device_class = value.get<std::string>();
    else
      label.extra[key] = value;
  }
  return label;
}

FingerprintDatabase::FingerprintDatabase(Eigen::MatrixXd matrix, std::vector<Label> labels,
                                         std::vector<std::string> tests)
    : matrix_(std::move(matrix)), labels_(std::move(labels)), tests_(std::move(tests)) {
  if (matrix_.rows() < 1 || matrix_.cols() < 1)
    throw DataError("fingerprint database must have at least one row and one column");
  if (static_cast<Eigen::Index>(labels_.size()) != matrix_.cols())
    throw DataError("database has " + std::to_string(matrix_.cols()) + " columns but " +
                    std::to_string(labels_.size()) + " labels");
  if (tests_.empty() && matrix_.rows() == static_cast<Eigen::Index>(kTestCount))
    tests_ = test_names();
  if (!tests_.empty() && static_cast<Eigen::Index>(tests_.size()) != matrix_.rows())
    throw DataError("database test list length does not match dimension");
  for (Eigen::Index c = 0; c < matrix_.cols(); ++c) {
    for (Eigen::Index r = 0; r < matrix_.rows(); ++r) {
      double v = matrix_(r, c);
      if (!std::isfinite(v) || v < 0.0)
        throw DataError("database column " + std::to_string(c) + " has an invalid entry at row " +
                        std::to_string(r));
    }
  }
}

FingerprintDatabase FingerprintDatabase::from_columns(const std::vector<FingerprintVector>& columns,
                                                      std::vector<Label> labels, std::vector<std::string> tests) {
  if (columns.empty())
    throw DataError("fingerprint database must have at least one column");
  const auto n = columns.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].size() != n)
      throw DataError("column " + std::to_string(c) + " has dimension " + std::to_string(columns[c].size()) +
                      ", expected " + std::to_string(n));
    m.col(static_cast<Eigen::Index>(c)) = columns[c].as_eigen();
  }
  return FingerprintDatabase(std::move(m), std::move(labels), std::move(tests));
}

FingerprintVector FingerprintDatabase::column(Eigen::Index i) const {
  const auto col = matrix_.col(i);
  return FingerprintVector(std::vector<double>(col.data(), col.data() + col.size()));
}

Json to_json(const FingerprintDatabase& db) {
  Json columns = Json::array();
  for (Eigen::Index c = 0; c < db.size(); ++c) {
    Json values = Json::array();
    for (Eigen::Index r = 0; r < db.dimension(); ++r)
      values.push_back(db.matrix()(r, c));
    columns.push_back({{"label", to_json(db.labels()[static_cast<std::size_t>(c)])}, {"values", std::move(values)}});
  }
  return {{"n", db.dimension()}, {"tests", db.tests()}, {"columns", std::move(columns)}};
}

FingerprintDatabase database_from_json(const Json& j) {
  try {
    const auto n = j.at("n").get<long>();
    if (n < 1)
      throw DataError("database dimension must be positive");
    std::vector<std::string> tests;
    if (j.contains("tests"))
      tests = j.at("tests").get<std::vector<std::string>>();
    const auto& cols = j.at("columns");
    if (!cols.is_array() || cols.empty())
      throw DataError("database needs a non-empty \"columns\" array");
    Eigen::MatrixXd m(n, static_cast<Eigen::Index>(cols.size()));
    std::vector<Label> labels;
    labels.reserve(cols.size());
    Eigen::Index c = 0;
    for (const auto& col : cols) {
      auto values = col.at("values").get<std::vector<double>>();
      if (static_cast<long>(values.size()) != n)
        throw DataError("column " + std::to_string(c) + " has " + std::to_string(values.size()) +
                        " values, expected " + std::to_string(n));
      for (long r = 0; r < n; ++r)
        m(r, c) = values[static_cast<std::size_t>(r)];
      labels.push_back(col.contains("label") ? label_from_json(col.at("label")) : Label{});
      ++c;
    }
    return FingerprintDatabase(std::move(m), std::move(labels), std::move(tests));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed database JSON: ") + e.what());
  }
}

FingerprintDatabase load_database(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open database file " + path);
  try {
    return database_from_json(Json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("cannot parse " + path + ": " + e.what());
  }
}

}  // namespace wasmfp
