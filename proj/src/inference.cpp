#include "fctbn/inference.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fctbn {

double JointGenerator::max_exit_rate() const {
  double best = 0.0;
  for (Eigen::Index a = 0; a < q.outerSize(); ++a) {
    best = std::max(best, -q.coeff(a, a));
  }
  return best;
}

JointGenerator amalgamate(const ModelSpec& spec, const CovariateVector& z) {
  if (spec.d > kMaxJointNodes) {
    throw std::invalid_argument("joint generator limited to d <= " + std::to_string(kMaxJointNodes));
  }
  JointGenerator gen;
  gen.d = spec.d;
  const auto n = static_cast<Eigen::Index>(gen.num_states());
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(n) * (spec.d + 1));
  for (Eigen::Index a = 0; a < n; ++a) {
    const StateVector state = StateVector::from_index(static_cast<std::uint64_t>(a), spec.d);
    double exit = 0.0;
    for (NodeId i = 0; i < spec.d; ++i) {
      const double rate = intensity(spec, i, state, z);
      if (rate <= 0.0) continue;
      entries.emplace_back(a, a ^ (Eigen::Index{1} << i), rate);
      exit += rate;
    }
    entries.emplace_back(a, a, -exit);
  }
  gen.q.resize(n, n);
  gen.q.setFromTriplets(entries.begin(), entries.end());
  gen.q.makeCompressed();
  return gen;
}

namespace {

void check_distribution(const JointGenerator& gen, std::span<const double> p0) {
  if (p0.size() != gen.num_states()) {
    throw std::invalid_argument("distribution length does not match the joint state count");
  }
  double total = 0.0;
  for (double v : p0) {
    if (!(v >= 0.0)) throw std::invalid_argument("initial distribution has a negative or NaN entry");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("initial distribution must sum to 1");
  }
}

std::vector<double> clean(const Eigen::VectorXd& v) {
  std::vector<double> out(static_cast<std::size_t>(v.size()));
  double total = 0.0;
  for (Eigen::Index a = 0; a < v.size(); ++a) {
    double x = v[a];
    if (x < 0.0) {
      if (x < -1e-12) {
        throw std::runtime_error("transient distribution has a negative entry " + std::to_string(x));
      }
      x = 0.0;
    }
    out[static_cast<std::size_t>(a)] = x;
    total += x;
  }
  for (double& x : out) x /= total;
  return out;
}

}  // namespace

std::vector<double> transient_distribution(const JointGenerator& gen, std::span<const double> p0, double t) {
  if (t < 0.0) throw std::invalid_argument("t must be non-negative");
  check_distribution(gen, p0);
  if (t == 0.0) return {p0.begin(), p0.end()};
  const double lambda = gen.max_exit_rate();
  if (lambda == 0.0) return {p0.begin(), p0.end()};

  constexpr double kMaxPoissonMean = 32.0;
  const auto pieces = static_cast<std::size_t>(std::ceil(lambda * t / kMaxPoissonMean));
  const double h = t / static_cast<double>(pieces);
  const double mu = lambda * h;
  const Eigen::SparseMatrix<double, Eigen::RowMajor> qt = gen.q.transpose();

  Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(p0.data(), static_cast<Eigen::Index>(p0.size()));
  for (std::size_t piece = 0; piece < pieces; ++piece) {
    Eigen::VectorXd v = p;
    double w = std::exp(-mu);
    Eigen::VectorXd acc = w * v;
    for (std::size_t k = 1;; ++k) {
      v += (qt * v) / lambda;
      w *= mu / static_cast<double>(k);
      acc += w * v;
      // Past the mode the remaining Poisson tail is below 2w.
      if (static_cast<double>(k) > 2.0 * mu && w < 1e-20) break;
    }
    p = acc;
  }
  return clean(p);
}

std::vector<double> interval_distribution(const JointGenerator& gen, std::span<const double> p0, double t,
                                          double k) {
  if (k < 0.0) throw std::invalid_argument("k must be non-negative");
  if (t < k) throw std::invalid_argument("interval query needs t >= k");
  return transient_distribution(gen, p0, t - k);
}

Eigen::MatrixXd propagator(const JointGenerator& gen, double t) {
  if (t < 0.0) throw std::invalid_argument("t must be non-negative");
  if (gen.d > 12) throw std::invalid_argument("dense propagator limited to d <= 12");
  const Eigen::MatrixXd qt = gen.dense() * t;
  return qt.exp();
}

std::vector<double> point_mass(const StateVector& state) {
  if (state.size() > kMaxJointNodes) {
    throw std::invalid_argument("joint distribution limited to d <= " + std::to_string(kMaxJointNodes));
  }
  std::vector<double> p(std::size_t{1} << state.size(), 0.0);
  p[state.to_index()] = 1.0;
  return p;
}

std::vector<double> node_marginals(std::span<const double> joint, std::size_t d) {
  if (joint.size() != (std::size_t{1} << d)) {
    throw std::invalid_argument("joint distribution length does not match d");
  }
  std::vector<double> out(d, 0.0);
  for (std::size_t a = 0; a < joint.size(); ++a) {
    for (std::size_t i = 0; i < d; ++i) {
      if ((a >> i) & 1u) out[i] += joint[a];
    }
  }
  return out;
}

std::vector<RiskCurve> emergence_trajectory(const ModelSpec& spec, const CovariateVector& z,
                                            const std::vector<NodeId>& prior, double horizon_months,
                                            double grid_step) {
  if (!(horizon_months > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (!(grid_step > 0.0)) throw std::invalid_argument("grid step must be positive");
  StateVector baseline(spec.d);
  for (NodeId i : prior) {
    if (i >= spec.d) throw std::out_of_range("prior node out of range");
    baseline.set(i, 1);
  }
  std::vector<double> times;
  for (std::size_t j = 0;; ++j) {
    const double t = static_cast<double>(j) * grid_step;
    if (t >= horizon_months - 1e-9 * grid_step) break;
    times.push_back(t);
  }
  times.push_back(horizon_months);

  const auto onset = predict_onset(spec, z, baseline, times);
  std::vector<RiskCurve> curves;
  for (NodeId i = 0; i < spec.d; ++i) {
    if (baseline[i]) continue;
    curves.push_back({i, times, onset[i]});
  }
  return curves;
}

std::vector<std::vector<double>> predict_onset(const ModelSpec& spec, const CovariateVector& z,
                                               const StateVector& baseline, std::span<const double> horizons) {
  if (baseline.size() != spec.d) throw std::invalid_argument("baseline length does not match d");
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    if (horizons[h] < 0.0) throw std::invalid_argument("horizons must be non-negative");
    if (h > 0 && horizons[h] < horizons[h - 1]) throw std::invalid_argument("horizons must be ascending");
  }
  const JointGenerator gen = amalgamate(spec, z);
  std::vector<std::vector<double>> table(spec.d, std::vector<double>(horizons.size()));
  std::vector<double> p = point_mass(baseline);
  double now = 0.0;
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    p = transient_distribution(gen, p, horizons[h] - now);
    now = horizons[h];
    const auto marg = node_marginals(p, spec.d);
    for (NodeId i = 0; i < spec.d; ++i) table[i][h] = marg[i];
  }
  return table;
}

}  // namespace fctbn
