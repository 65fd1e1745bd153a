#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fctbn/pca.hpp"
#include "fctbn/simulation.hpp"

using namespace fctbn;

namespace {

// Cyclic Jacobi rotations; returns eigenvalues in descending order.
std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> out(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = a(k, k);
  std::sort(out.rbegin(), out.rend());
  return out;
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) x(r, c) = 2.0 * rng.uniform() - 1.0 + 0.3 * c;
  // correlate the columns
  for (Eigen::Index c = 1; c < cols; ++c) x.col(c) += 0.5 * x.col(c - 1);
  return x;
}

}  // namespace

TEST_CASE("one-dimensional data") {
  Eigen::MatrixXd x(4, 1);
  x << 1, 2, 3, 6;
  PcaResult r = pca_fit(x, 1);
  CHECK(r.model.loadings(0, 0) == 1.0);
  CHECK(r.model.explained_variance_ratio[0] == 1.0);
  CHECK(r.reduced(0, 0) == -2.0);
  CHECK(r.reduced(3, 0) == 3.0);
}

TEST_CASE("rank-one data is explained by one component") {
  Eigen::MatrixXd x(50, 4);
  Rng rng(1);
  const Eigen::RowVector4d dir(1.0, -2.0, 0.5, 3.0);
  for (Eigen::Index r = 0; r < 50; ++r) x.row(r) = (rng.uniform() - 0.5) * dir;
  PcaResult res = pca_fit(x, 2);
  CHECK(std::abs(res.model.explained_variance_ratio[0] - 1.0) <= 1e-10);
  CHECK(std::abs(res.model.explained_variance_ratio[1]) <= 1e-10);
  const Eigen::RowVectorXd unit = dir / dir.norm();
  CHECK((res.model.loadings.row(0) - unit).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("eigenvalues match a Jacobi oracle") {
  const Eigen::MatrixXd x = random_matrix(200, 5, 3);
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / 199.0;
  const auto oracle = jacobi_eigenvalues(cov);
  double total = 0.0;
  for (double v : oracle) total += v;
  PcaResult res = pca_fit(x, 5);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(std::abs(res.model.explained_variance_ratio[static_cast<Eigen::Index>(k)] - oracle[k] / total) <= 1e-12);
  }
  // projected variance along each loading equals its eigenvalue
  for (Eigen::Index k = 0; k < 5; ++k) {
    const double var = res.reduced.col(k).squaredNorm() / 199.0;
    CHECK(std::abs(var - oracle[static_cast<std::size_t>(k)]) <= 1e-10);
  }
}

TEST_CASE("loadings are orthonormal, scores centered, signs fixed") {
  const Eigen::MatrixXd x = random_matrix(120, 6, 7);
  PcaResult res = pca_fit(x, 4);
  const Eigen::MatrixXd gram = res.model.loadings * res.model.loadings.transpose();
  CHECK((gram - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(res.reduced.colwise().mean().cwiseAbs().maxCoeff() <= 1e-12);
  for (Eigen::Index r = 0; r < 4; ++r) {
    Eigen::Index arg = 0;
    res.model.loadings.row(r).cwiseAbs().maxCoeff(&arg);
    CHECK(res.model.loadings(r, arg) > 0.0);
  }
  CHECK((res.model.transform(x) - res.reduced).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("full-rank reconstruction") {
  const Eigen::MatrixXd x = random_matrix(40, 3, 11);
  PcaResult res = pca_fit(x, 3);
  const Eigen::MatrixXd back = (res.reduced * res.model.loadings).rowwise() + res.model.means.transpose();
  CHECK((back - x).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("intercept column is kept in front") {
  Eigen::MatrixXd x(30, 4);
  x.col(0).setOnes();
  x.rightCols(3) = random_matrix(30, 3, 2);
  PcaResult res = pca_fit_transform(x, 2);
  CHECK(res.reduced.cols() == 3);
  CHECK(res.reduced.col(0) == Eigen::VectorXd::Ones(30));
  CHECK(res.model.means.size() == 3);
}

TEST_CASE("invalid component counts") {
  const Eigen::MatrixXd x = random_matrix(10, 3, 5);
  CHECK_THROWS_AS(pca_fit(x, 0), std::invalid_argument);
  CHECK_THROWS_AS(pca_fit(x, 4), std::invalid_argument);
}

TEST_CASE("JSON round trip") {
  const Eigen::MatrixXd x = random_matrix(25, 4, 9);
  PcaModel m = pca_fit(x, 2).model;
  PcaModel back = PcaModel::from_json(nlohmann::json::parse(m.to_json().dump()));
  CHECK(back.means == m.means);
  CHECK(back.loadings == m.loadings);
  CHECK(back.explained_variance_ratio == m.explained_variance_ratio);
  CHECK(back.transform(x) == m.transform(x));
}
