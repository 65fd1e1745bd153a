#pragma once

#include <Eigen/Dense>
#include <json.hpp>

namespace fctbn {

struct PcaModel {
  Eigen::VectorXd means;             // per input column
  Eigen::MatrixXd loadings;          // n_components x columns, orthonormal rows
  Eigen::VectorXd explained_variance_ratio;
  std::size_t n_components = 0;

  // Centered data projected onto the loadings.
  Eigen::MatrixXd transform(const Eigen::MatrixXd& data) const;
  nlohmann::json to_json() const;
  static PcaModel from_json(const nlohmann::json& j);
};

struct PcaResult {
  PcaModel model;
  Eigen::MatrixXd reduced;
};

// Column-centered PCA from the eigendecomposition of the sample covariance.
// Each loading is signed so that its largest-magnitude entry is positive.
PcaResult pca_fit(const Eigen::MatrixXd& data, std::size_t n_components);

// For covariate matrices whose column 0 is the intercept: PCA runs on the
// remaining columns and the intercept is re-attached in front of the scores.
PcaResult pca_fit_transform(const Eigen::MatrixXd& with_intercept, std::size_t n_components);

}  // namespace fctbn
