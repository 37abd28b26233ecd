#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

namespace wasmfp {

using Json = nlohmann::ordered_json;

/// Ordered timing results in milliseconds. Every entry is finite and >= 0.
class FingerprintVector {
 public:
  FingerprintVector() = default;
  explicit FingerprintVector(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }
  Eigen::Map<const Eigen::VectorXd> as_eigen() const {
    return {values_.data(), static_cast<Eigen::Index>(values_.size())};
  }

  bool operator==(const FingerprintVector&) const = default;

 private:
  std::vector<double> values_;
};

struct Label {
  std::string browser;
  std::string os;
  std::string device_class;
  Json extra = Json::object();  // any further keys, preserved verbatim

  bool operator==(const Label&) const = default;
  std::string to_string() const;
};

Json to_json(const Label& label);
Label label_from_json(const Json& j);

/// Known fingerprints as the columns of an N x M matrix, one label per column.
class FingerprintDatabase {
 public:
  FingerprintDatabase(Eigen::MatrixXd matrix, std::vector<Label> labels,
                      std::vector<std::string> tests = {});

  static FingerprintDatabase from_columns(const std::vector<FingerprintVector>& columns,
                                          std::vector<Label> labels, std::vector<std::string> tests = {});

  Eigen::Index dimension() const { return matrix_.rows(); }
  Eigen::Index size() const { return matrix_.cols(); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  const std::vector<Label>& labels() const { return labels_; }
  const std::vector<std::string>& tests() const { return tests_; }
  FingerprintVector column(Eigen::Index i) const;

 private:
  Eigen::MatrixXd matrix_;
  std::vector<Label> labels_;
  std::vector<std::string> tests_;
};

// {"n":N,"tests":[...],"columns":[{"label":{...},"values":[...]},...]}
Json to_json(const FingerprintDatabase& db);
FingerprintDatabase database_from_json(const Json& j);
FingerprintDatabase load_database(const std::string& path);

}  // namespace wasmfp
