#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fctbn {

using NodeId = std::size_t;

// Binary joint state of the D condition nodes (0 = absent, 1 = present).
class StateVector {
 public:
  StateVector() = default;
  explicit StateVector(std::size_t d) : bits_(d, 0) {}
  explicit StateVector(std::vector<std::uint8_t> bits);

  static StateVector from_index(std::uint64_t index, std::size_t d);

  std::size_t size() const { return bits_.size(); }
  std::uint8_t operator[](NodeId i) const { return bits_[i]; }
  void set(NodeId i, std::uint8_t value);
  void flip(NodeId i) { bits_[i] ^= 1u; }
  std::size_t count_on() const;

  // Joint-state index with bit i = state of node i. Requires size() <= 63.
  std::uint64_t to_index() const;

  const std::vector<std::uint8_t>& bits() const { return bits_; }

  friend bool operator==(const StateVector&, const StateVector&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

// Exogenous covariates of one subject. Entry 0 is the intercept slot and is
// always 1.0.
class CovariateVector {
 public:
  CovariateVector() : values_{1.0} {}
  explicit CovariateVector(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t c) const { return values_[c]; }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const CovariateVector&, const CovariateVector&) = default;

 private:
  std::vector<double> values_;
};

// Parent sets per node. Cycles between distinct nodes are allowed, self
// parenting is not.
class Graph {
 public:
  Graph() = default;
  explicit Graph(std::vector<std::vector<NodeId>> parents);

  static Graph empty(std::size_t d);
  static Graph complete(std::size_t d);

  std::size_t num_nodes() const { return parents_.size(); }
  const std::vector<NodeId>& parents(NodeId i) const { return parents_.at(i); }
  std::size_t max_parents() const;

  bool has_edge(NodeId from, NodeId to) const;
  // Position of `parent` within parents(child), or -1.
  int parent_position(NodeId child, NodeId parent) const;

  struct Edge {
    NodeId from;
    NodeId to;
    friend bool operator==(const Edge&, const Edge&) = default;
  };
  // Edges ordered by child, then by position in the parent list.
  std::vector<Edge> edges() const;
  std::size_t num_edges() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::vector<std::vector<NodeId>> parents_;
};

// Poisson-regression coefficients indexed (child i, own state s, source k,
// covariate c). k = 0 is the baseline row, k >= 1 the row added when the
// k-th parent of i is ON. The rows (i, s, k >= 1) are the regularization
// groups.
class CoefficientTensor {
 public:
  CoefficientTensor() = default;
  CoefficientTensor(const Graph& graph, std::size_t m);

  std::size_t num_nodes() const { return num_parents_.size(); }
  std::size_t num_covariates() const { return m_; }
  std::size_t num_parents(NodeId i) const { return num_parents_.at(i); }
  std::size_t size() const { return data_.size(); }

  double& at(NodeId i, int s, std::size_t k, std::size_t c);
  double at(NodeId i, int s, std::size_t k, std::size_t c) const;

  std::span<double> row(NodeId i, int s, std::size_t k);
  std::span<const double> row(NodeId i, int s, std::size_t k) const;

  // All coefficients of block (i, s), rows k = 0..P contiguous.
  std::span<double> block(NodeId i, int s);
  std::span<const double> block(NodeId i, int s) const;

  double row_norm(NodeId i, int s, std::size_t k) const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const CoefficientTensor& other) const;
  bool all_finite() const;

  friend bool operator==(const CoefficientTensor&, const CoefficientTensor&) = default;

 private:
  std::size_t offset(NodeId i, int s, std::size_t k) const;

  std::size_t m_ = 0;
  std::vector<std::size_t> num_parents_;
  std::vector<std::size_t> node_offset_;
  std::vector<double> data_;
};

struct ModelSpec {
  std::size_t d = 0;
  std::size_t m = 0;
  Graph graph;
  CoefficientTensor coeffs;
  bool irreversible = true;
  // Display labels for nodes; defaults to decimal indices.
  std::vector<std::string> labels;

  ModelSpec() = default;
  ModelSpec(Graph g, CoefficientTensor c, bool irreversible_flag,
            std::vector<std::string> node_labels = {});

  // Throws std::invalid_argument if any invariant is violated.
  void validate() const;

  // Index of `label`, or throws std::invalid_argument.
  NodeId node_index(const std::string& label) const;

  bool structurally_zero(int s) const { return irreversible && s == 1; }
};

std::vector<std::string> default_labels(std::size_t d);

double log_intensity(const ModelSpec& spec, NodeId i, const StateVector& state,
                     const CovariateVector& z);

// Rate at which node i leaves its current state given the parent states in
// `state` and covariates z. Parent effects compose multiplicatively.
double intensity(const ModelSpec& spec, NodeId i, const StateVector& state,
                 const CovariateVector& z);

// Edge j -> i is kept iff some entry of the groups (i, ., k_j, .) exceeds tol
// in absolute value.
Graph structure_from_coefficients(const CoefficientTensor& coeffs,
                                  const Graph& declared, double tol);

}  // namespace fctbn
