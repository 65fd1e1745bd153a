#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fctbn/core.hpp"
#include "fctbn/gmm.hpp"
#include "fctbn/likelihood.hpp"
#include "fctbn/simulation.hpp"

namespace fctbn {

// One weight per coefficient row (i, s, k); laid out like a CoefficientTensor
// with a single covariate.
class RowWeights {
 public:
  RowWeights() = default;
  RowWeights(const Graph& graph, double fill);

  double operator()(NodeId i, int s, std::size_t k) const { return w_.at(i, s, k, 0); }
  double& operator()(NodeId i, int s, std::size_t k) { return w_.at(i, s, k, 0); }
  bool matches(const Graph& graph) const;
  std::span<const double> values() const { return w_.data(); }

 private:
  CoefficientTensor w_;
};

struct PenaltyConfig {
  double lambda = 0.0;
  // Adaptive weights per row; unset means 1 everywhere.
  std::optional<RowWeights> weights;
  // Multiplier k in front of the group sum; unset means the group size m.
  std::optional<double> group_size_multiplier;
  bool penalize_baseline = false;

  void validate() const;
  double multiplier(std::size_t m) const;
  double weight(NodeId i, int s, std::size_t k) const;
  bool penalized(std::size_t k) const { return k > 0 || penalize_baseline; }
};

struct FistaOptions {
  std::size_t max_iter = 10000;
  double tol = 1e-8;
  // Backtracking line search: the step starts from a local curvature bound,
  // shrinks by `backtrack` on a failed sufficient-decrease test and grows by
  // `step_growth` after every accepted iteration.
  double backtrack = 0.5;
  double step_growth = 1.2;
  // A block has converged once its relative objective change is below `tol`
  // and its gradient mapping is below grad_tol * max(1, exits in the block).
  double grad_tol = 1e-6;
  // Plateau-triggered GMM post-processing.
  bool gmm_early_stop = false;
  double plateau_tol = 1e-6;
  std::size_t plateau_window = 50;
};

struct EarlyStopResult {
  CoefficientTensor coeffs;
  bool applied = false;
  std::size_t zeroed = 0;
  std::optional<GaussianComponent> zero_component;
  double band_low = 0.0;
  double band_high = 0.0;
  double objective_before = 0.0;
  double objective_after = 0.0;
  std::string warning;
};

struct FitResult {
  Graph declared_graph;
  bool irreversible = true;
  CoefficientTensor coeffs;
  double lambda_used = 0.0;
  std::vector<double> objective_trace;
  std::size_t nonzero_groups = 0;
  std::size_t penalized_groups = 0;
  double sparsity_ratio = 0.0;
  Graph learned_graph;
  std::size_t iterations = 0;
  bool converged = false;
  bool early_stopped = false;
  std::optional<EarlyStopResult> early_stop;

  double final_objective() const { return objective_trace.empty() ? 0.0 : objective_trace.back(); }
  ModelSpec to_model(std::vector<std::string> labels = {}) const;
};

// Sum over penalized rows of multiplier * lambda * w * ||row||_2; rows of
// structurally zero blocks are skipped.
double penalty_value(const CoefficientTensor& coeffs, const PenaltyConfig& penalty, bool irreversible);

// -log_likelihood + penalty_value.
double penalized_objective(const ModelSpec& model, const Cohort& cohort, const PenaltyConfig& penalty);
double penalized_objective(const ExposureTable& table, const CoefficientTensor& coeffs,
                           const PenaltyConfig& penalty);

// Block soft-thresholding: 0 if ||v|| <= threshold, else v * (1 - threshold / ||v||).
std::vector<double> group_prox(std::span<const double> v, double threshold);

FitResult fista_fit(const ExposureTable& table, const PenaltyConfig& penalty, const FistaOptions& opts,
                    const CoefficientTensor* warm_start = nullptr);
FitResult fista_fit(const Cohort& cohort, const Graph& graph, bool irreversible,
                    const PenaltyConfig& penalty, const FistaOptions& opts);

inline constexpr double kAdaptiveWeightFloor = 1e-6;

// w = 1 / max(||row||, 1e-6) for every row of the unpenalized estimate.
RowWeights adaptive_weights(const CoefficientTensor& unpenalized, const Graph& graph);

// One fit per lambda (ascending), each warm-started from the previous one.
std::vector<FitResult> regularization_path(const ExposureTable& table, std::span<const double> lambda_grid,
                                           const PenaltyConfig& base, const FistaOptions& opts);

// Adaptive fit at one lambda: weights from an unpenalized fit on the same data.
struct AdaptiveFit {
  FitResult unpenalized;
  RowWeights weights;
  FitResult fit;
};
AdaptiveFit adaptive_fit(const ExposureTable& table, double lambda, const PenaltyConfig& base,
                         const FistaOptions& opts);

struct CvOptions {
  FistaOptions fista;
  PenaltyConfig base;  // lambda ignored
  bool adaptive = true;
};

struct CvPoint {
  double lambda;
  double mean_error;
  std::vector<double> fold_errors;
};

struct CvResult {
  double best_lambda = 0.0;
  std::vector<CvPoint> curve;
  std::vector<std::size_t> fold_of_subject;
};

// Lambda with the smallest mean error; ties go to the larger lambda.
double select_lambda(const std::vector<CvPoint>& curve);

// Subject-level K-fold CV. Error = held-out negative log-likelihood per
// held-out subject, averaged over folds; ties go to the larger lambda.
CvResult cross_validate(const Cohort& cohort, const Graph& graph, bool irreversible,
                        std::span<const double> lambda_grid, std::size_t folds, std::uint64_t seed,
                        const CvOptions& opts);

// Zeroes the coefficients lying within 3 sigma of the near-zero GMM
// component, then runs one proximal-gradient pass with those entries pinned
// at zero.
EarlyStopResult gmm_early_stop(const ExposureTable& table, const CoefficientTensor& coeffs,
                               const PenaltyConfig& penalty, const FistaOptions& opts = {});

// The grid 0, 10^0, ..., 10^6.
std::vector<double> default_lambda_grid();

}  // namespace fctbn
