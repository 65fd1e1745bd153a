#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <span>
#include <vector>

#include "fctbn/core.hpp"

namespace fctbn {

inline constexpr std::size_t kMaxJointNodes = 20;

// Generator of the joint process over 2^D states; bit i of a state index is
// the state of node i. Off-diagonal entries are nonzero only between states
// differing in exactly one bit.
struct JointGenerator {
  std::size_t d = 0;
  Eigen::SparseMatrix<double, Eigen::RowMajor> q;

  std::size_t num_states() const { return std::size_t{1} << d; }
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(q); }
  // Largest exit rate max_a |Q[a][a]|.
  double max_exit_rate() const;
};

JointGenerator amalgamate(const ModelSpec& spec, const CovariateVector& z);

// p0 * exp(Q t) by uniformization: the interval is split so that each piece
// has Poisson mean <= 32, and each piece sums the series until the remaining
// Poisson tail is below 1e-19. Negative entries above -1e-12 are clipped and
// the result renormalized; anything more negative throws.
std::vector<double> transient_distribution(const JointGenerator& gen, std::span<const double> p0, double t);

// p0 * exp(Q (t - k)), t >= k.
std::vector<double> interval_distribution(const JointGenerator& gen, std::span<const double> p0, double t,
                                          double k);

// Dense exp(Q t) by scaling and squaring with a Pade approximant. Limited to
// d <= 12.
Eigen::MatrixXd propagator(const JointGenerator& gen, double t);

// Point mass on `state`.
std::vector<double> point_mass(const StateVector& state);

// P[node i ON] for every node, summed from a joint distribution.
std::vector<double> node_marginals(std::span<const double> joint, std::size_t d);

struct RiskCurve {
  NodeId node;
  std::vector<double> times;
  std::vector<double> probability;
};

// Marginal onset curves for every node not in `prior`, on the grid
// 0, step, 2 step, ... up to the horizon (the horizon itself is always
// included).
std::vector<RiskCurve> emergence_trajectory(const ModelSpec& spec, const CovariateVector& z,
                                            const std::vector<NodeId>& prior, double horizon_months,
                                            double grid_step = 1.0);

// table[i][h] = P[node i ON at horizons[h]] starting from `baseline`.
std::vector<std::vector<double>> predict_onset(const ModelSpec& spec, const CovariateVector& z,
                                               const StateVector& baseline, std::span<const double> horizons);

}  // namespace fctbn
