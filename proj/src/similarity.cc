#include "wasmfp/similarity.h"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

#include "wasmfp/errors.h"

namespace wasmfp {

namespace {

void check_query(const FingerprintVector& query, const FingerprintDatabase& db) {
  if (static_cast<Eigen::Index>(query.size()) != db.dimension())
    throw DataError("query has dimension " + std::to_string(query.size()) + ", database has " +
                    std::to_string(db.dimension()));
}

// Index of the smallest entry; first occurrence wins.
Match argmin(const Eigen::Ref<const Eigen::VectorXd>& scores) {
  Match best{0, scores(0)};
  for (Eigen::Index i = 1; i < scores.size(); ++i) {
    if (scores(i) < best.distance)
      best = {i, scores(i)};
  }
  return best;
}

Eigen::MatrixXd centered_columns(const FingerprintDatabase& db) {
  const Eigen::VectorXd mean = db.matrix().rowwise().mean();
  return db.matrix().colwise() - mean;
}

}  // namespace

Match nearest_euclidean(const FingerprintVector& query, const FingerprintDatabase& db) {
  check_query(query, db);
  const Eigen::VectorXd squared = (db.matrix().colwise() - query.as_eigen()).colwise().squaredNorm().transpose();
  auto best = argmin(squared);
  best.distance = std::sqrt(best.distance);
  return best;
}

Match nearest_inner_product(const FingerprintVector& query, const FingerprintDatabase& db) {
  check_query(query, db);
  const auto& a = db.matrix();
  const Eigen::VectorXd scores =
      (-2.0 * (a.transpose() * query.as_eigen())) + a.colwise().squaredNorm().transpose();
  return argmin(scores);
}

Eigen::MatrixXd estimate_covariance(const FingerprintDatabase& db, double ridge) {
  if (db.size() < 2)
    throw DataError("covariance needs at least two database columns");
  if (!(ridge >= 0.0) || !std::isfinite(ridge))
    throw DataError("ridge must be a finite non-negative value");
  const Eigen::MatrixXd centered = centered_columns(db);
  Eigen::MatrixXd cov = (centered * centered.transpose()) / static_cast<double>(db.size() - 1);
  cov = 0.5 * (cov + cov.transpose()).eval();
  cov.diagonal().array() += ridge;
  return cov;
}

double default_ridge(const FingerprintDatabase& db) {
  constexpr double kFloor = 1e-12;
  const double trace = estimate_covariance(db, 0.0).trace();
  return std::max(1e-6 * trace / static_cast<double>(db.dimension()), kFloor);
}

Eigen::VectorXd PcaBasis::project(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return projection * (x - mean);
}

Eigen::VectorXd PcaBasis::reconstruct(const Eigen::Ref<const Eigen::VectorXd>& coords) const {
  return projection.transpose() * coords + mean;
}

PcaBasis fit_pca(const FingerprintDatabase& db, Eigen::Index k) {
  const auto n = db.dimension();
  if (k < 1 || k > n)
    throw DataError("PCA dimension k=" + std::to_string(k) + " outside 1.." + std::to_string(n));
  if (db.size() < 2)
    throw DataError("PCA needs at least two database columns");

  PcaBasis basis;
  basis.mean = db.matrix().rowwise().mean();
  const Eigen::MatrixXd centered = db.matrix().colwise() - basis.mean;

  // Left singular vectors of the centred data are the covariance eigenvectors;
  // singular values come back sorted descending.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeFullU);
  const Eigen::MatrixXd& u = svd.matrixU();
  Eigen::VectorXd variance = Eigen::VectorXd::Zero(n);
  const auto& sv = svd.singularValues();
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    variance(i) = sv(i) * sv(i) / static_cast<double>(db.size() - 1);
  const double total = variance.sum();

  basis.projection.resize(k, n);
  basis.explained_variance_ratio.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    Eigen::VectorXd dir = u.col(i);
    // Deterministic sign: the largest-magnitude component is positive.
    Eigen::Index pivot = 0;
    dir.cwiseAbs().maxCoeff(&pivot);
    if (dir(pivot) < 0)
      dir = -dir;
    basis.projection.row(i) = dir.transpose();
    basis.explained_variance_ratio(i) = total > 0 ? variance(i) / total : 0.0;
  }
  return basis;
}

Json to_json(const PcaBasis& basis) {
  Json components = Json::array();
  for (Eigen::Index r = 0; r < basis.projection.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < basis.projection.cols(); ++c)
      row.push_back(basis.projection(r, c));
    components.push_back(std::move(row));
  }
  Json mean = Json::array();
  for (Eigen::Index i = 0; i < basis.mean.size(); ++i)
    mean.push_back(basis.mean(i));
  Json ratios = Json::array();
  for (Eigen::Index i = 0; i < basis.explained_variance_ratio.size(); ++i)
    ratios.push_back(basis.explained_variance_ratio(i));
  return {{"k", basis.k()},
          {"mean", std::move(mean)},
          {"components", std::move(components)},
          {"explained_variance_ratio", std::move(ratios)}};
}

PcaBasis pca_from_json(const Json& j) {
  try {
    PcaBasis basis;
    auto mean = j.at("mean").get<std::vector<double>>();
    auto rows = j.at("components").get<std::vector<std::vector<double>>>();
    const auto n = static_cast<Eigen::Index>(mean.size());
    const auto k = static_cast<Eigen::Index>(rows.size());
    if (n == 0 || k == 0)
      throw DataError("PCA basis needs a non-empty mean and at least one component");
    basis.mean = Eigen::Map<Eigen::VectorXd>(mean.data(), n);
    basis.projection.resize(k, n);
    for (Eigen::Index r = 0; r < k; ++r) {
      if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != n)
        throw DataError("PCA component " + std::to_string(r) + " has the wrong length");
      for (Eigen::Index c = 0; c < n; ++c)
        basis.projection(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
    basis.explained_variance_ratio = Eigen::VectorXd::Zero(k);
    if (j.contains("explained_variance_ratio")) {
      auto ratios = j.at("explained_variance_ratio").get<std::vector<double>>();
      for (Eigen::Index i = 0; i < std::min<Eigen::Index>(k, static_cast<Eigen::Index>(ratios.size())); ++i)
        basis.explained_variance_ratio(i) = ratios[static_cast<std::size_t>(i)];
    }
    return basis;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed PCA basis JSON: ") + e.what());
  }
}

SimilarityModel::SimilarityModel(FingerprintDatabase db, std::optional<Eigen::MatrixXd> covariance,
                                 std::optional<PcaBasis> pca)
    : db_(std::move(db)), covariance_(std::move(covariance)), pca_(std::move(pca)) {
  const auto n = db_.dimension();

  if (covariance_) {
    const auto& cov = *covariance_;
    if (cov.rows() != n || cov.cols() != n)
      throw DataError("covariance must be " + std::to_string(n) + "x" + std::to_string(n));
    const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
      throw DataError("covariance is not symmetric");
    cholesky_.emplace(cov);
    if (cholesky_->info() != Eigen::Success) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
      throw DataError("covariance is not positive definite: smallest eigenvalue " +
                      std::to_string(eig.eigenvalues().minCoeff()));
    }
  }

  if (pca_) {
    const auto& p = pca_->projection;
    if (p.cols() != n || pca_->mean.size() != n)
      throw DataError("PCA basis dimension does not match database");
    if (p.rows() < 1 || p.rows() > n)
      throw DataError("PCA basis must retain between 1 and N components");
    const Eigen::MatrixXd gram = p * p.transpose();
    if ((gram - Eigen::MatrixXd::Identity(p.rows(), p.rows())).cwiseAbs().maxCoeff() > 1e-9)
      throw DataError("PCA components are not orthonormal");
    projected_ = p * (db_.matrix().colwise() - pca_->mean);
  }
}

SimilarityModel SimilarityModel::with_estimated_covariance(FingerprintDatabase db, std::optional<PcaBasis> pca) {
  std::optional<Eigen::MatrixXd> cov;
  if (db.size() >= 2)
    cov = estimate_covariance(db, default_ridge(db));
  return SimilarityModel(std::move(db), std::move(cov), std::move(pca));
}

double SimilarityModel::mahalanobis(const Eigen::Ref<const Eigen::VectorXd>& x,
                                    const Eigen::Ref<const Eigen::VectorXd>& y) const {
  if (!cholesky_)
    throw MissingModelError("model has no covariance");
  if (x.size() != db_.dimension() || y.size() != db_.dimension())
    throw DataError("vector dimension does not match model");
  return cholesky_->matrixL().solve(x - y).norm();
}

Match nearest_mahalanobis(const FingerprintVector& query, const SimilarityModel& model) {
  if (!model.cholesky_)
    throw MissingModelError("model has no covariance for Mahalanobis matching");
  check_query(query, model.db_);
  // d_i^2 = |L^-1 (b - a_i)|^2 with Sigma = L L^T
  const Eigen::MatrixXd diffs = (-model.db_.matrix()).colwise() + query.as_eigen();
  const Eigen::MatrixXd whitened = model.cholesky_->matrixL().solve(diffs);
  auto best = argmin(whitened.colwise().squaredNorm().transpose());
  best.distance = std::sqrt(best.distance);
  return best;
}

Match nearest_pca(const FingerprintVector& query, const SimilarityModel& model) {
  if (!model.pca_)
    throw MissingModelError("model has no fitted PCA basis");
  check_query(query, model.db_);
  const Eigen::VectorXd coords = model.pca_->project(query.as_eigen());
  auto best = argmin((model.projected_.colwise() - coords).colwise().squaredNorm().transpose());
  best.distance = std::sqrt(best.distance);
  return best;
}

}  // namespace wasmfp
