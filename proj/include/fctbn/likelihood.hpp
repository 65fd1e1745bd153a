#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fctbn/core.hpp"
#include "fctbn/simulation.hpp"

namespace fctbn {

// Maximal interval during which a node's own state and all its parents'
// states are constant.
struct Segment {
  std::size_t subject;
  NodeId node;
  int state;
  // Bit k set iff the k-th parent (graph.parents(node)[k]) is ON.
  std::uint32_t on_parents;
  double dwell;
  // True iff the interval ends with a flip of `node` itself.
  bool terminated;
};

std::vector<Segment> decompose_segments(const Cohort& cohort, const Graph& graph);

// Dwell times T[x|u] and exit counts M[x|u], indexed (node, state, parent
// configuration). The configuration is the on_parents bitmask of Segment.
class SufficientStats {
 public:
  explicit SufficientStats(const Graph& graph);

  std::size_t num_nodes() const { return num_configs_.size(); }
  std::size_t num_configs(NodeId i) const { return num_configs_.at(i); }

  double& dwell(NodeId i, int s, std::uint32_t config) { return t_[index(i, s, config)]; }
  double dwell(NodeId i, int s, std::uint32_t config) const { return t_[index(i, s, config)]; }
  std::uint64_t& exits(NodeId i, int s, std::uint32_t config) { return m_[index(i, s, config)]; }
  std::uint64_t exits(NodeId i, int s, std::uint32_t config) const { return m_[index(i, s, config)]; }

  SufficientStats& operator+=(const SufficientStats& other);

 private:
  std::size_t index(NodeId i, int s, std::uint32_t config) const;

  std::vector<std::size_t> num_configs_;
  std::vector<std::size_t> offset_;
  std::vector<double> t_;
  std::vector<std::uint64_t> m_;
};

SufficientStats sufficient_stats(const Graph& graph, std::span<const Segment> segments);

// q_hat = M / T per cell; std::nullopt where T == 0.
struct RateTable {
  std::vector<std::vector<std::optional<double>>> rates;  // [node][s * configs + config]
  std::optional<double> at(NodeId i, int s, std::uint32_t config) const;
};

RateTable mle_intensities(const SufficientStats& stats);

// Log-rates above this are clamped before exponentiation.
inline constexpr double kMaxLogRate = 50.0;

// Segments aggregated per (subject, node, own state, ON-parent set). The
// functional log-likelihood is linear in the per-cell totals, so evaluating
// on the table is exact.
class ExposureTable {
 public:
  struct Row {
    std::size_t subject;
    std::uint32_t on_parents;
    double exposure;
    double exits;
  };
  struct Block {
    NodeId node;
    int state;
    std::vector<Row> rows;
  };

  ExposureTable(const Cohort& cohort, const Graph& graph, bool irreversible);

  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& block(NodeId i, int s) const;
  bool has_block(NodeId i, int s) const;
  const Graph& graph() const { return graph_; }
  const std::vector<CovariateVector>& covariates() const { return covariates_; }
  bool irreversible() const { return irreversible_; }
  std::size_t num_covariates() const { return m_; }

  // Log-likelihood contribution of one (node, state) block. `theta` holds rows
  // k = 0..P of that block. Adds to `grad` when non-empty.
  double block_log_likelihood(const Block& block, std::span<const double> theta,
                              std::span<double> grad) const;

  double log_likelihood(const CoefficientTensor& coeffs) const;
  CoefficientTensor gradient(const CoefficientTensor& coeffs) const;

  // Number of linear predictors clamped at kMaxLogRate so far.
  std::size_t clamp_count() const { return clamp_count_; }

 private:
  Graph graph_;
  std::vector<CovariateVector> covariates_;
  std::vector<std::string> subject_ids_;
  bool irreversible_;
  std::size_t m_;
  std::vector<Block> blocks_;
  std::vector<int> block_index_;  // node * 2 + s -> index into blocks_, -1 if absent
  mutable std::size_t clamp_count_ = 0;
};

// Sum over segments of [terminated * eta - dwell * exp(eta)] with eta the
// summed linear predictor of the segment's baseline and ON-parent rows.
// Segments in state 1 of an irreversible model contribute nothing.
double log_likelihood(const ModelSpec& model, const Cohort& cohort);
CoefficientTensor gradient(const ModelSpec& model, const Cohort& cohort);

}  // namespace fctbn
