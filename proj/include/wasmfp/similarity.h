#pragma once

#include <cstddef>
#include <optional>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "wasmfp/fingerprint.h"

namespace wasmfp {

/// Result of a nearest-neighbour query. For the inner-product search
/// `distance` holds the minimised score -2 b.a + a.a instead.
struct Match {
  Eigen::Index index = 0;
  double distance = 0.0;
};

// All searches break ties toward the lowest column index.
Match nearest_euclidean(const FingerprintVector& query, const FingerprintDatabase& db);
Match nearest_inner_product(const FingerprintVector& query, const FingerprintDatabase& db);

/// Unbiased sample covariance across columns plus ridge * I. Needs M >= 2.
Eigen::MatrixXd estimate_covariance(const FingerprintDatabase& db, double ridge);

/// 1e-6 * trace(S) / N for the unregularised sample covariance S, with a
/// floor so an all-identical database still yields a positive ridge.
double default_ridge(const FingerprintDatabase& db);

struct PcaBasis {
  Eigen::VectorXd mean;                      // N
  Eigen::MatrixXd projection;                // k x N, orthonormal rows
  Eigen::VectorXd explained_variance_ratio;  // k, descending

  Eigen::Index k() const { return projection.rows(); }
  Eigen::VectorXd project(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd reconstruct(const Eigen::Ref<const Eigen::VectorXd>& coords) const;
};

/// Top-k principal directions of the mean-centred columns.
PcaBasis fit_pca(const FingerprintDatabase& db, Eigen::Index k);

Json to_json(const PcaBasis& basis);
PcaBasis pca_from_json(const Json& j);

/// Immutable matching model: a database with an optional covariance (for
/// Mahalanobis search) and an optional PCA basis. The covariance factor,
/// whitened columns and projected columns are computed once at construction,
/// so a model may be shared freely between threads.
class SimilarityModel {
 public:
  explicit SimilarityModel(FingerprintDatabase db, std::optional<Eigen::MatrixXd> covariance = std::nullopt,
                           std::optional<PcaBasis> pca = std::nullopt);

  /// Database plus covariance estimated with default_ridge (when M >= 2).
  static SimilarityModel with_estimated_covariance(FingerprintDatabase db,
                                                   std::optional<PcaBasis> pca = std::nullopt);

  const FingerprintDatabase& database() const { return db_; }
  bool has_covariance() const { return covariance_.has_value(); }
  bool has_pca() const { return pca_.has_value(); }
  const std::optional<Eigen::MatrixXd>& covariance() const { return covariance_; }
  const std::optional<PcaBasis>& pca() const { return pca_; }

  /// Mahalanobis distance between two arbitrary vectors under the model's covariance.
  double mahalanobis(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) const;

  friend Match nearest_mahalanobis(const FingerprintVector& query, const SimilarityModel& model);
  friend Match nearest_pca(const FingerprintVector& query, const SimilarityModel& model);

 private:
  FingerprintDatabase db_;
  std::optional<Eigen::MatrixXd> covariance_;
  std::optional<Eigen::LLT<Eigen::MatrixXd>> cholesky_;
  std::optional<PcaBasis> pca_;
  Eigen::MatrixXd projected_;  // P (A - mu)
};

Match nearest_mahalanobis(const FingerprintVector& query, const SimilarityModel& model);
Match nearest_pca(const FingerprintVector& query, const SimilarityModel& model);

}  // namespace wasmfp
