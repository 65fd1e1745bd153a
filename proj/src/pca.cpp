#include "fctbn/pca.hpp"

#include <Eigen/Eigenvalues>
#include <stdexcept>

namespace fctbn {

Eigen::MatrixXd PcaModel::transform(const Eigen::MatrixXd& data) const {
  if (data.cols() != means.size()) {
    throw std::invalid_argument("PCA input has the wrong number of columns");
  }
  return (data.rowwise() - means.transpose()) * loadings.transpose();
}

nlohmann::json PcaModel::to_json() const {
  nlohmann::json j;
  j["means"] = std::vector<double>(means.data(), means.data() + means.size());
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < loadings.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(loadings.cols()));
    for (Eigen::Index c = 0; c < loadings.cols(); ++c) row[static_cast<std::size_t>(c)] = loadings(r, c);
    rows.push_back(row);
  }
  j["loadings"] = rows;
  j["explained_variance_ratio"] =
      std::vector<double>(explained_variance_ratio.data(),
                          explained_variance_ratio.data() + explained_variance_ratio.size());
  return j;
}

PcaModel PcaModel::from_json(const nlohmann::json& j) {
  PcaModel m;
  const auto means = j.at("means").get<std::vector<double>>();
  const auto rows = j.at("loadings").get<std::vector<std::vector<double>>>();
  const auto ratio = j.at("explained_variance_ratio").get<std::vector<double>>();
  m.means = Eigen::Map<const Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
  m.n_components = rows.size();
  m.loadings.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(means.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != means.size()) throw std::invalid_argument("PCA loading row has the wrong length");
    for (std::size_t c = 0; c < means.size(); ++c) {
      m.loadings(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  m.explained_variance_ratio = Eigen::Map<const Eigen::VectorXd>(ratio.data(), static_cast<Eigen::Index>(ratio.size()));
  return m;
}

PcaResult pca_fit(const Eigen::MatrixXd& data, std::size_t n_components) {
  if (n_components < 1) throw std::invalid_argument("n_components must be at least 1");
  if (n_components > static_cast<std::size_t>(data.cols())) {
    throw std::invalid_argument("n_components exceeds the number of columns");
  }
  if (data.rows() < 2) throw std::invalid_argument("PCA needs at least two rows");

  PcaResult out;
  PcaModel& model = out.model;
  model.n_components = n_components;
  model.means = data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.rowwise() - model.means.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(data.rows() - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw std::runtime_error("covariance eigendecomposition failed");
  // Eigen returns ascending eigenvalues.
  const Eigen::VectorXd values = solver.eigenvalues().reverse().cwiseMax(0.0);
  const Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();
  const double total = values.sum();

  const auto k = static_cast<Eigen::Index>(n_components);
  model.loadings = vectors.leftCols(k).transpose();
  model.explained_variance_ratio.resize(k);
  for (Eigen::Index r = 0; r < k; ++r) {
    Eigen::Index arg = 0;
    model.loadings.row(r).cwiseAbs().maxCoeff(&arg);
    if (model.loadings(r, arg) < 0.0) model.loadings.row(r) *= -1.0;
    model.explained_variance_ratio[r] = total > 0.0 ? values[r] / total : 0.0;
  }
  out.reduced = centered * model.loadings.transpose();
  return out;
}

PcaResult pca_fit_transform(const Eigen::MatrixXd& with_intercept, std::size_t n_components) {
  if (with_intercept.cols() < 2) throw std::invalid_argument("no covariate columns besides the intercept");
  PcaResult inner = pca_fit(with_intercept.rightCols(with_intercept.cols() - 1), n_components);
  Eigen::MatrixXd reduced(with_intercept.rows(), inner.reduced.cols() + 1);
  reduced.col(0).setOnes();
  reduced.rightCols(inner.reduced.cols()) = inner.reduced;
  inner.reduced = std::move(reduced);
  return inner;
}

}  // namespace fctbn
