#include "fctbn/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace fctbn {

RowWeights::RowWeights(const Graph& graph, double fill) : w_(graph, 1) {
  for (double& v : w_.data()) v = fill;
}

bool RowWeights::matches(const Graph& graph) const {
  if (w_.num_nodes() != graph.num_nodes()) return false;
  for (NodeId i = 0; i < graph.num_nodes(); ++i) {
    if (w_.num_parents(i) != graph.parents(i).size()) return false;
  }
  return true;
}

void PenaltyConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lambda must be finite and non-negative");
  }
  if (group_size_multiplier && !(*group_size_multiplier >= 0.0)) {
    throw std::invalid_argument("group size multiplier must be non-negative");
  }
  if (weights) {
    for (double w : weights->values()) {
      if (!(w > 0.0) || !std::isfinite(w)) {
        throw std::invalid_argument("adaptive weights must be finite and positive");
      }
    }
  }
}

double PenaltyConfig::multiplier(std::size_t m) const {
  return group_size_multiplier.value_or(static_cast<double>(m));
}

double PenaltyConfig::weight(NodeId i, int s, std::size_t k) const {
  return weights ? (*weights)(i, s, k) : 1.0;
}

std::vector<double> group_prox(std::span<const double> v, double threshold) {
  if (threshold < 0.0) throw std::invalid_argument("prox threshold must be non-negative");
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double norm = std::sqrt(sq);
  std::vector<double> out(v.size(), 0.0);
  if (norm <= threshold) return out;
  const double scale = 1.0 - threshold / norm;
  for (std::size_t c = 0; c < v.size(); ++c) out[c] = v[c] * scale;
  return out;
}

double penalty_value(const CoefficientTensor& coeffs, const PenaltyConfig& penalty, bool irreversible) {
  if (penalty.lambda == 0.0) return 0.0;
  const double mult = penalty.multiplier(coeffs.num_covariates());
  double total = 0.0;
  for (NodeId i = 0; i < coeffs.num_nodes(); ++i) {
    for (int s = 0; s < 2; ++s) {
      if (irreversible && s == 1) continue;
      for (std::size_t k = 0; k <= coeffs.num_parents(i); ++k) {
        if (!penalty.penalized(k)) continue;
        total += mult * penalty.lambda * penalty.weight(i, s, k) * coeffs.row_norm(i, s, k);
      }
    }
  }
  return total;
}

double penalized_objective(const ExposureTable& table, const CoefficientTensor& coeffs,
                           const PenaltyConfig& penalty) {
  penalty.validate();
  return -table.log_likelihood(coeffs) + penalty_value(coeffs, penalty, table.irreversible());
}

double penalized_objective(const ModelSpec& model, const Cohort& cohort, const PenaltyConfig& penalty) {
  ExposureTable table(cohort, model.graph, model.irreversible);
  return penalized_objective(table, model.coeffs, penalty);
}

namespace {

// Accelerated proximal gradient on one (node, state) Poisson regression.
class BlockSolver {
 public:
  BlockSolver(const ExposureTable& table, const ExposureTable::Block& block, const PenaltyConfig& penalty,
              std::span<const double> start, const FistaOptions& opts)
      : table_(table), block_(block), opts_(opts), m_(table.num_covariates()),
        p_(table.graph().parents(block.node).size()) {
    const double mult = penalty.multiplier(m_);
    thr_.assign(p_ + 1, 0.0);
    for (std::size_t k = 0; k <= p_; ++k) {
      if (penalty.penalized(k)) thr_[k] = mult * penalty.lambda * penalty.weight(block.node, block.state, k);
    }
    frozen_.assign(start.size(), 0);
    x_.assign(start.begin(), start.end());
    y_ = x_;
    grad_.resize(x_.size());
    objective_ = smooth(x_, {}) + penalty_of(x_);
    check_finite(objective_);
    step_ = initial_step(x_);
    for (const auto& row : block.rows) exits_ += row.exits;
  }

  void freeze(std::size_t idx) {
    frozen_[idx] = 1;
    x_[idx] = 0.0;
    y_[idx] = 0.0;
    objective_ = smooth(x_, {}) + penalty_of(x_);
  }

  // One accelerated iteration; returns the accepted objective.
  double iterate() {
    if (converged_) return objective_;
    std::vector<double> z = prox_step(y_);
    double fz = objective_of(z);
    if (fz > objective_) {
      // Momentum overshoot: restart from the current iterate.
      y_ = x_;
      t_ = 1.0;
      z = prox_step(y_);
      fz = objective_of(z);
      if (fz > objective_) {
        converged_ = true;
        return objective_;
      }
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_ * t_));
    const double beta = (t_ - 1.0) / t_next;
    for (std::size_t a = 0; a < z.size(); ++a) {
      y_[a] = z[a] + beta * (z[a] - x_[a]);
      if (frozen_[a]) y_[a] = 0.0;
    }
    x_ = std::move(z);
    t_ = t_next;
    const double previous = objective_;
    objective_ = fz;
    step_ *= opts_.step_growth;
    const double rel = (previous - objective_) / std::max(std::abs(previous), 1e-300);
    if (rel < opts_.tol && stationary()) converged_ = true;
    return objective_;
  }

  bool converged() const { return converged_; }
  double objective() const { return objective_; }
  const std::vector<double>& solution() const { return x_; }

 private:
  double smooth(std::span<const double> theta, std::span<double> grad) const {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
    const double ll = table_.block_log_likelihood(block_, theta, grad);
    for (double& g : grad) g = -g;
    return -ll;
  }

  double penalty_of(std::span<const double> theta) const {
    double total = 0.0;
    for (std::size_t k = 0; k <= p_; ++k) {
      if (thr_[k] == 0.0) continue;
      double sq = 0.0;
      for (std::size_t c = 0; c < m_; ++c) sq += theta[k * m_ + c] * theta[k * m_ + c];
      total += thr_[k] * std::sqrt(sq);
    }
    return total;
  }

  double objective_of(std::span<const double> theta) const {
    const double f = smooth(theta, {}) + penalty_of(theta);
    check_finite(f);
    return f;
  }

  void check_finite(double f) const {
    if (!std::isfinite(f)) {
      throw std::runtime_error("non-finite objective in block (node " + std::to_string(block_.node) +
                               ", state " + std::to_string(block_.state) + ")");
    }
  }

  // Max-norm of the gradient mapping (x - prox(x - t grad)) / t at x.
  bool stationary() {
    const std::vector<double> z = prox_step(x_);
    double worst = 0.0;
    for (std::size_t a = 0; a < z.size(); ++a) worst = std::max(worst, std::abs(x_[a] - z[a]) / step_);
    return worst <= opts_.grad_tol * std::max(1.0, exits_);
  }

  // Inverse of the largest-eigenvalue bound sum_r T_r exp(eta_r) ||x_r||^2.
  double initial_step(std::span<const double> theta) const {
    double curvature = 0.0;
    for (const auto& row : block_.rows) {
      const auto z = table_.covariates()[row.subject].values();
      double eta = 0.0;
      double zz = 0.0;
      for (std::size_t c = 0; c < m_; ++c) zz += z[c] * z[c];
      std::size_t active = 0;
      for (std::size_t k = 0; k <= p_; ++k) {
        if (k > 0 && !(row.on_parents & (1u << (k - 1)))) continue;
        ++active;
        for (std::size_t c = 0; c < m_; ++c) eta += z[c] * theta[k * m_ + c];
      }
      curvature += row.exposure * std::exp(std::min(eta, kMaxLogRate)) * zz * static_cast<double>(active);
    }
    return curvature > 0.0 ? 1.0 / curvature : 1.0;
  }

  std::vector<double> apply_prox(std::vector<double> v, double step) const {
    for (std::size_t a = 0; a < v.size(); ++a) {
      if (frozen_[a]) v[a] = 0.0;
    }
    for (std::size_t k = 0; k <= p_; ++k) {
      if (thr_[k] == 0.0) continue;
      auto row = std::span<const double>(v).subspan(k * m_, m_);
      auto shrunk = group_prox(row, step * thr_[k]);
      std::copy(shrunk.begin(), shrunk.end(), v.begin() + static_cast<std::ptrdiff_t>(k * m_));
    }
    return v;
  }

  // Backtracking proximal-gradient step from `from`.
  std::vector<double> prox_step(const std::vector<double>& from) {
    const double f_from = smooth(from, grad_);
    check_finite(f_from);
    std::vector<double> v(from.size());
    while (true) {
      for (std::size_t a = 0; a < v.size(); ++a) v[a] = from[a] - step_ * grad_[a];
      std::vector<double> z = apply_prox(v, step_);
      double lin = 0.0;
      double sq = 0.0;
      for (std::size_t a = 0; a < z.size(); ++a) {
        const double diff = z[a] - from[a];
        lin += grad_[a] * diff;
        sq += diff * diff;
      }
      const double f_z = smooth(z, {});
      const double bound = f_from + lin + sq / (2.0 * step_);
      if (std::isfinite(f_z) && f_z <= bound + 1e-12 * std::max(1.0, std::abs(f_from))) return z;
      step_ *= opts_.backtrack;
      if (step_ < 1e-300) {
        throw std::runtime_error("line search failed in block (node " + std::to_string(block_.node) + ")");
      }
    }
  }

  const ExposureTable& table_;
  const ExposureTable::Block& block_;
  FistaOptions opts_;
  std::size_t m_;
  std::size_t p_;
  std::vector<double> thr_;
  std::vector<std::uint8_t> frozen_;
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> grad_;
  double t_ = 1.0;
  double step_ = 1.0;
  double objective_ = 0.0;
  double exits_ = 0.0;
  bool converged_ = false;
};

void fill_summary(FitResult& result, const ExposureTable& table, const PenaltyConfig& penalty) {
  const auto& coeffs = result.coeffs;
  std::size_t free_coeffs = 0;
  std::size_t zeros = 0;
  result.nonzero_groups = 0;
  result.penalized_groups = 0;
  for (const auto& b : table.blocks()) {
    for (std::size_t k = 0; k <= coeffs.num_parents(b.node); ++k) {
      bool nonzero = false;
      for (double v : coeffs.row(b.node, b.state, k)) {
        ++free_coeffs;
        if (v == 0.0) {
          ++zeros;
        } else {
          nonzero = true;
        }
      }
      if (penalty.penalized(k) && k > 0) {
        ++result.penalized_groups;
        if (nonzero) ++result.nonzero_groups;
      }
    }
  }
  result.sparsity_ratio = free_coeffs == 0 ? 0.0 : static_cast<double>(zeros) / static_cast<double>(free_coeffs);
  result.learned_graph = structure_from_coefficients(coeffs, table.graph(), 0.0);
}

}  // namespace

ModelSpec FitResult::to_model(std::vector<std::string> labels) const {
  return ModelSpec(declared_graph, coeffs, irreversible, std::move(labels));
}

FitResult fista_fit(const ExposureTable& table, const PenaltyConfig& penalty, const FistaOptions& opts,
                    const CoefficientTensor* warm_start) {
  penalty.validate();
  if (table.covariates().empty()) throw std::invalid_argument("cannot fit an empty cohort");
  if (penalty.weights && !penalty.weights->matches(table.graph())) {
    throw std::invalid_argument("adaptive weights do not match the graph");
  }
  if (!(opts.backtrack > 0.0 && opts.backtrack < 1.0) || !(opts.step_growth >= 1.0) || !(opts.grad_tol > 0.0)) {
    throw std::invalid_argument("invalid step policy");
  }
  FitResult result;
  result.declared_graph = table.graph();
  result.irreversible = table.irreversible();
  result.lambda_used = penalty.lambda;
  result.coeffs = CoefficientTensor(table.graph(), table.num_covariates());
  if (warm_start) {
    if (!warm_start->same_shape(result.coeffs)) {
      throw std::invalid_argument("warm start has the wrong shape");
    }
    for (const auto& b : table.blocks()) {
      auto src = warm_start->block(b.node, b.state);
      std::copy(src.begin(), src.end(), result.coeffs.block(b.node, b.state).begin());
    }
  }

  std::vector<BlockSolver> solvers;
  solvers.reserve(table.blocks().size());
  for (const auto& b : table.blocks()) {
    solvers.emplace_back(table, b, penalty, result.coeffs.block(b.node, b.state), opts);
  }
  const auto total = [&] {
    double f = 0.0;
    for (const auto& s : solvers) f += s.objective();
    return f;
  };

  double previous = total();
  std::size_t plateau = 0;
  for (std::size_t iter = 0; iter < opts.max_iter; ++iter) {
    bool all_done = true;
    for (auto& s : solvers) {
      s.iterate();
      all_done = all_done && s.converged();
    }
    const double current = total();
    result.objective_trace.push_back(current);
    result.iterations = iter + 1;
    if (all_done) {
      result.converged = true;
      break;
    }
    const double rel = (previous - current) / std::max(std::abs(previous), 1e-300);
    plateau = rel < opts.plateau_tol ? plateau + 1 : 0;
    previous = current;
    if (opts.gmm_early_stop && plateau >= opts.plateau_window) {
      result.early_stopped = true;
      break;
    }
  }

  for (std::size_t b = 0; b < solvers.size(); ++b) {
    const auto& blk = table.blocks()[b];
    const auto& x = solvers[b].solution();
    std::copy(x.begin(), x.end(), result.coeffs.block(blk.node, blk.state).begin());
  }
  if (result.early_stopped) {
    EarlyStopResult es = gmm_early_stop(table, result.coeffs, penalty, opts);
    result.coeffs = es.coeffs;
    result.early_stop = std::move(es);
  }
  fill_summary(result, table, penalty);
  return result;
}

FitResult fista_fit(const Cohort& cohort, const Graph& graph, bool irreversible, const PenaltyConfig& penalty,
                    const FistaOptions& opts) {
  ExposureTable table(cohort, graph, irreversible);
  return fista_fit(table, penalty, opts);
}

RowWeights adaptive_weights(const CoefficientTensor& unpenalized, const Graph& graph) {
  RowWeights w(graph, 1.0);
  if (unpenalized.num_nodes() != graph.num_nodes()) {
    throw std::invalid_argument("unpenalized estimate does not match graph");
  }
  for (NodeId i = 0; i < graph.num_nodes(); ++i) {
    for (int s = 0; s < 2; ++s) {
      for (std::size_t k = 0; k <= graph.parents(i).size(); ++k) {
        w(i, s, k) = 1.0 / std::max(unpenalized.row_norm(i, s, k), kAdaptiveWeightFloor);
      }
    }
  }
  return w;
}

std::vector<FitResult> regularization_path(const ExposureTable& table, std::span<const double> lambda_grid,
                                           const PenaltyConfig& base, const FistaOptions& opts) {
  if (!std::is_sorted(lambda_grid.begin(), lambda_grid.end())) {
    throw std::invalid_argument("lambda grid must be sorted ascending");
  }
  std::vector<FitResult> path;
  path.reserve(lambda_grid.size());
  for (double lambda : lambda_grid) {
    PenaltyConfig pen = base;
    pen.lambda = lambda;
    const CoefficientTensor* warm = path.empty() ? nullptr : &path.back().coeffs;
    path.push_back(fista_fit(table, pen, opts, warm));
  }
  return path;
}

AdaptiveFit adaptive_fit(const ExposureTable& table, double lambda, const PenaltyConfig& base,
                         const FistaOptions& opts) {
  PenaltyConfig unpen = base;
  unpen.lambda = 0.0;
  unpen.weights.reset();
  FistaOptions plain = opts;
  plain.gmm_early_stop = false;
  AdaptiveFit out{fista_fit(table, unpen, plain), {}, {}};
  out.weights = adaptive_weights(out.unpenalized.coeffs, table.graph());
  PenaltyConfig pen = base;
  pen.lambda = lambda;
  pen.weights = out.weights;
  out.fit = fista_fit(table, pen, opts, &out.unpenalized.coeffs);
  return out;
}

CvResult cross_validate(const Cohort& cohort, const Graph& graph, bool irreversible,
                        std::span<const double> lambda_grid, std::size_t folds, std::uint64_t seed,
                        const CvOptions& opts) {
  if (folds < 2) throw std::invalid_argument("cross-validation needs at least 2 folds");
  if (cohort.size() < folds) throw std::invalid_argument("more folds than subjects");
  if (lambda_grid.empty()) throw std::invalid_argument("lambda grid is empty");
  if (!std::is_sorted(lambda_grid.begin(), lambda_grid.end())) {
    throw std::invalid_argument("lambda grid must be sorted ascending");
  }

  const std::size_t n = cohort.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t a = n - 1; a > 0; --a) {
    const auto b = static_cast<std::size_t>(rng.uniform() * static_cast<double>(a + 1));
    std::swap(order[a], order[b]);
  }
  CvResult result;
  result.fold_of_subject.assign(n, 0);
  for (std::size_t pos = 0; pos < n; ++pos) result.fold_of_subject[order[pos]] = pos % folds;

  result.curve.resize(lambda_grid.size());
  for (std::size_t l = 0; l < lambda_grid.size(); ++l) result.curve[l].lambda = lambda_grid[l];

  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_idx;
    for (std::size_t p = 0; p < n; ++p) {
      (result.fold_of_subject[p] == f ? test_idx : train_idx).push_back(p);
    }
    const Cohort train = cohort.subset(train_idx);
    const Cohort test = cohort.subset(test_idx);
    ExposureTable train_table(train, graph, irreversible);
    ExposureTable test_table(test, graph, irreversible);

    PenaltyConfig base = opts.base;
    const CoefficientTensor* warm = nullptr;
    FitResult unpenalized;
    if (opts.adaptive) {
      PenaltyConfig unpen = base;
      unpen.lambda = 0.0;
      unpen.weights.reset();
      FistaOptions plain = opts.fista;
      plain.gmm_early_stop = false;
      unpenalized = fista_fit(train_table, unpen, plain);
      base.weights = adaptive_weights(unpenalized.coeffs, graph);
      warm = &unpenalized.coeffs;
    }
    std::vector<FitResult> path;
    for (double lambda : lambda_grid) {
      PenaltyConfig pen = base;
      pen.lambda = lambda;
      path.push_back(fista_fit(train_table, pen, opts.fista, path.empty() ? warm : &path.back().coeffs));
      const double err = -test_table.log_likelihood(path.back().coeffs) / static_cast<double>(test.size());
      result.curve[path.size() - 1].fold_errors.push_back(err);
    }
  }

  for (auto& point : result.curve) {
    point.mean_error = std::accumulate(point.fold_errors.begin(), point.fold_errors.end(), 0.0) /
                       static_cast<double>(folds);
    if (!std::isfinite(point.mean_error)) {
      throw std::runtime_error("non-finite cross-validation error at lambda " + std::to_string(point.lambda));
    }
  }
  result.best_lambda = select_lambda(result.curve);
  return result;
}

double select_lambda(const std::vector<CvPoint>& curve) {
  if (curve.empty()) throw std::invalid_argument("empty cross-validation curve");
  const CvPoint* best = &curve.front();
  for (const auto& point : curve) {
    if (point.mean_error < best->mean_error || (point.mean_error == best->mean_error && point.lambda > best->lambda)) {
      best = &point;
    }
  }
  return best->lambda;
}

EarlyStopResult gmm_early_stop(const ExposureTable& table, const CoefficientTensor& coeffs,
                               const PenaltyConfig& penalty, const FistaOptions& opts) {
  EarlyStopResult out;
  out.coeffs = coeffs;
  out.objective_before = penalized_objective(table, coeffs, penalty);
  out.objective_after = out.objective_before;

  std::vector<double> values;
  for (const auto& b : table.blocks()) {
    for (double v : coeffs.block(b.node, b.state)) {
      if (v != 0.0) values.push_back(v);
    }
  }
  if (values.size() < 10) {
    out.warning = "fewer than 10 nonzero coefficients; early stop skipped";
    return out;
  }
  const GmmFit gmm = fit_gmm(values);
  const auto near = std::min_element(gmm.components.begin(), gmm.components.end(),
                                     [](const GaussianComponent& a, const GaussianComponent& b) {
                                       return std::abs(a.mean) < std::abs(b.mean);
                                     });
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double overall_sd = std::sqrt(var / static_cast<double>(values.size()));
  const double sigma = std::sqrt(near->variance);
  out.zero_component = *near;
  out.band_low = near->mean - 3.0 * sigma;
  out.band_high = near->mean + 3.0 * sigma;
  if (std::abs(near->mean) > overall_sd || std::abs(near->mean) > 3.0 * sigma) {
    out.warning = "no mixture component is centred near zero; early stop skipped";
    return out;
  }

  std::vector<BlockSolver> solvers;
  std::vector<std::size_t> zeroed_in_block;
  for (const auto& b : table.blocks()) {
    auto block = coeffs.block(b.node, b.state);
    solvers.emplace_back(table, b, penalty, block, opts);
    std::size_t count = 0;
    for (std::size_t a = 0; a < block.size(); ++a) {
      if (block[a] != 0.0 && block[a] >= out.band_low && block[a] <= out.band_high) {
        solvers.back().freeze(a);
        ++count;
      }
    }
    zeroed_in_block.push_back(count);
    out.zeroed += count;
  }
  if (out.zeroed == 0) return out;

  out.applied = true;
  for (std::size_t b = 0; b < solvers.size(); ++b) {
    // Only blocks touched by the zeroing get the extra pass.
    if (zeroed_in_block[b] > 0) solvers[b].iterate();
    const auto& blk = table.blocks()[b];
    const auto& x = solvers[b].solution();
    std::copy(x.begin(), x.end(), out.coeffs.block(blk.node, blk.state).begin());
  }
  out.objective_after = penalized_objective(table, out.coeffs, penalty);
  return out;
}

std::vector<double> default_lambda_grid() {
  return {0.0, 1e0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6};
}

}  // namespace fctbn
