#include "fctbn/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fctbn {

StateVector::StateVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto b : bits_) {
    if (b > 1) {
      throw std::invalid_argument("state entries must be 0 or 1");
    }
  }
}

StateVector StateVector::from_index(std::uint64_t index, std::size_t d) {
  if (d > 63) {
    throw std::invalid_argument("joint-state index supports at most 63 nodes");
  }
  StateVector s(d);
  for (std::size_t i = 0; i < d; ++i) {
    s.bits_[i] = static_cast<std::uint8_t>((index >> i) & 1u);
  }
  return s;
}

void StateVector::set(NodeId i, std::uint8_t value) {
  if (value > 1) {
    throw std::invalid_argument("state entries must be 0 or 1");
  }
  bits_.at(i) = value;
}

std::size_t StateVector::count_on() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

std::uint64_t StateVector::to_index() const {
  if (bits_.size() > 63) {
    throw std::invalid_argument("joint-state index supports at most 63 nodes");
  }
  std::uint64_t index = 0;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    index |= static_cast<std::uint64_t>(bits_[i]) << i;
  }
  return index;
}

CovariateVector::CovariateVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) {
    throw std::invalid_argument("covariate vector must have at least the intercept entry");
  }
  if (values_[0] != 1.0) {
    throw std::invalid_argument("covariate entry 0 is the intercept and must equal 1.0");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("covariate entries must be finite");
    }
  }
}

Graph::Graph(std::vector<std::vector<NodeId>> parents) : parents_(std::move(parents)) {
  const std::size_t d = parents_.size();
  for (NodeId i = 0; i < d; ++i) {
    const auto& pa = parents_[i];
    if (pa.size() > 30) {
      throw std::invalid_argument("at most 30 parents per node are supported");
    }
    for (std::size_t a = 0; a < pa.size(); ++a) {
      if (pa[a] >= d) {
        throw std::invalid_argument("parent index " + std::to_string(pa[a]) +
                                    " out of range for node " + std::to_string(i));
      }
      if (pa[a] == i) {
        throw std::invalid_argument("node " + std::to_string(i) + " lists itself as a parent");
      }
      for (std::size_t b = 0; b < a; ++b) {
        if (pa[b] == pa[a]) {
          throw std::invalid_argument("duplicate parent " + std::to_string(pa[a]) +
                                      " for node " + std::to_string(i));
        }
      }
    }
  }
}

Graph Graph::empty(std::size_t d) {
  return Graph(std::vector<std::vector<NodeId>>(d));
}

Graph Graph::complete(std::size_t d) {
  std::vector<std::vector<NodeId>> parents(d);
  for (NodeId i = 0; i < d; ++i) {
    for (NodeId j = 0; j < d; ++j) {
      if (j != i) parents[i].push_back(j);
    }
  }
  return Graph(std::move(parents));
}

std::size_t Graph::max_parents() const {
  std::size_t best = 0;
  for (const auto& pa : parents_) best = std::max(best, pa.size());
  return best;
}

bool Graph::has_edge(NodeId from, NodeId to) const {
  return parent_position(to, from) >= 0;
}

int Graph::parent_position(NodeId child, NodeId parent) const {
  const auto& pa = parents_.at(child);
  auto it = std::find(pa.begin(), pa.end(), parent);
  return it == pa.end() ? -1 : static_cast<int>(it - pa.begin());
}

std::vector<Graph::Edge> Graph::edges() const {
  std::vector<Edge> out;
  for (NodeId i = 0; i < parents_.size(); ++i) {
    for (NodeId j : parents_[i]) out.push_back({j, i});
  }
  return out;
}

std::size_t Graph::num_edges() const {
  std::size_t n = 0;
  for (const auto& pa : parents_) n += pa.size();
  return n;
}

CoefficientTensor::CoefficientTensor(const Graph& graph, std::size_t m) : m_(m) {
  if (m == 0) {
    throw std::invalid_argument("coefficient tensor needs m >= 1 covariates");
  }
  const std::size_t d = graph.num_nodes();
  num_parents_.resize(d);
  node_offset_.resize(d);
  std::size_t total = 0;
  for (NodeId i = 0; i < d; ++i) {
    num_parents_[i] = graph.parents(i).size();
    node_offset_[i] = total;
    total += 2 * (num_parents_[i] + 1) * m;
  }
  data_.assign(total, 0.0);
}

std::size_t CoefficientTensor::offset(NodeId i, int s, std::size_t k) const {
  if (i >= num_parents_.size()) {
    throw std::out_of_range("node index out of range");
  }
  if (s != 0 && s != 1) {
    throw std::out_of_range("own state must be 0 or 1");
  }
  const std::size_t p = num_parents_[i];
  if (k > p) {
    throw std::out_of_range("source index out of range");
  }
  return node_offset_[i] + (static_cast<std::size_t>(s) * (p + 1) + k) * m_;
}

double& CoefficientTensor::at(NodeId i, int s, std::size_t k, std::size_t c) {
  if (c >= m_) throw std::out_of_range("covariate index out of range");
  return data_[offset(i, s, k) + c];
}

double CoefficientTensor::at(NodeId i, int s, std::size_t k, std::size_t c) const {
  if (c >= m_) throw std::out_of_range("covariate index out of range");
  return data_[offset(i, s, k) + c];
}

std::span<double> CoefficientTensor::row(NodeId i, int s, std::size_t k) {
  return std::span<double>(data_).subspan(offset(i, s, k), m_);
}

std::span<const double> CoefficientTensor::row(NodeId i, int s, std::size_t k) const {
  return std::span<const double>(data_).subspan(offset(i, s, k), m_);
}

std::span<double> CoefficientTensor::block(NodeId i, int s) {
  return std::span<double>(data_).subspan(offset(i, s, 0), (num_parents_[i] + 1) * m_);
}

std::span<const double> CoefficientTensor::block(NodeId i, int s) const {
  return std::span<const double>(data_).subspan(offset(i, s, 0), (num_parents_[i] + 1) * m_);
}

double CoefficientTensor::row_norm(NodeId i, int s, std::size_t k) const {
  double sq = 0.0;
  for (double v : row(i, s, k)) sq += v * v;
  return std::sqrt(sq);
}

bool CoefficientTensor::same_shape(const CoefficientTensor& other) const {
  return m_ == other.m_ && num_parents_ == other.num_parents_;
}

bool CoefficientTensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::vector<std::string> default_labels(std::size_t d) {
  std::vector<std::string> out;
  out.reserve(d);
  for (std::size_t i = 0; i < d; ++i) out.push_back(std::to_string(i));
  return out;
}

ModelSpec::ModelSpec(Graph g, CoefficientTensor c, bool irreversible_flag,
                     std::vector<std::string> node_labels)
    : d(g.num_nodes()),
      m(c.num_covariates()),
      graph(std::move(g)),
      coeffs(std::move(c)),
      irreversible(irreversible_flag),
      labels(node_labels.empty() ? default_labels(d) : std::move(node_labels)) {
  validate();
}

void ModelSpec::validate() const {
  if (d < 1) throw std::invalid_argument("model needs at least one node");
  if (m < 1) throw std::invalid_argument("model needs at least one covariate (intercept)");
  if (graph.num_nodes() != d) {
    throw std::invalid_argument("graph node count does not match d");
  }
  if (coeffs.num_nodes() != d || coeffs.num_covariates() != m) {
    throw std::invalid_argument("coefficient tensor shape does not match (d, m)");
  }
  for (NodeId i = 0; i < d; ++i) {
    if (coeffs.num_parents(i) != graph.parents(i).size()) {
      throw std::invalid_argument("coefficient tensor parent count mismatch at node " +
                                  std::to_string(i));
    }
  }
  if (!coeffs.all_finite()) {
    throw std::invalid_argument("coefficients must be finite");
  }
  if (irreversible) {
    for (NodeId i = 0; i < d; ++i) {
      for (double v : coeffs.block(i, 1)) {
        if (v != 0.0) {
          throw std::invalid_argument("irreversible model has non-zero coefficients for leaving state 1 at node " +
                                      std::to_string(i));
        }
      }
    }
  }
  if (labels.size() != d) {
    throw std::invalid_argument("label count does not match d");
  }
  for (std::size_t a = 0; a < labels.size(); ++a) {
    for (std::size_t b = 0; b < a; ++b) {
      if (labels[a] == labels[b]) {
        throw std::invalid_argument("duplicate node label '" + labels[a] + "'");
      }
    }
  }
}

NodeId ModelSpec::node_index(const std::string& label) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) {
    throw std::invalid_argument("unknown node label '" + label + "'");
  }
  return static_cast<NodeId>(it - labels.begin());
}

namespace {

void check_query(const ModelSpec& spec, NodeId i, const StateVector& state,
                 const CovariateVector& z) {
  if (i >= spec.d) {
    throw std::out_of_range("node index " + std::to_string(i) + " out of range");
  }
  if (state.size() != spec.d) {
    throw std::invalid_argument("state length does not match d");
  }
  if (z.size() != spec.m) {
    throw std::invalid_argument("covariate length " + std::to_string(z.size()) +
                                " does not match m = " + std::to_string(spec.m));
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) acc += a[c] * b[c];
  return acc;
}

}  // namespace

double log_intensity(const ModelSpec& spec, NodeId i, const StateVector& state,
                     const CovariateVector& z) {
  check_query(spec, i, state, z);
  const int s = state[i];
  if (spec.structurally_zero(s)) {
    return -std::numeric_limits<double>::infinity();
  }
  double eta = dot(z.values(), spec.coeffs.row(i, s, 0));
  const auto& pa = spec.graph.parents(i);
  for (std::size_t k = 0; k < pa.size(); ++k) {
    if (state[pa[k]] == 1) {
      eta += dot(z.values(), spec.coeffs.row(i, s, k + 1));
    }
  }
  return eta;
}

double intensity(const ModelSpec& spec, NodeId i, const StateVector& state,
                 const CovariateVector& z) {
  const double eta = log_intensity(spec, i, state, z);
  if (std::isinf(eta) && eta < 0) return 0.0;
  return std::exp(eta);
}

Graph structure_from_coefficients(const CoefficientTensor& coeffs, const Graph& declared,
                                  double tol) {
  if (tol < 0) throw std::invalid_argument("tol must be non-negative");
  const std::size_t d = declared.num_nodes();
  if (coeffs.num_nodes() != d) {
    throw std::invalid_argument("coefficient tensor does not match declared graph");
  }
  std::vector<std::vector<NodeId>> kept(d);
  for (NodeId i = 0; i < d; ++i) {
    const auto& pa = declared.parents(i);
    for (std::size_t k = 0; k < pa.size(); ++k) {
      bool present = false;
      for (int s = 0; s < 2 && !present; ++s) {
        for (double v : coeffs.row(i, s, k + 1)) {
          if (std::abs(v) > tol) {
            present = true;
            break;
          }
        }
      }
      if (present) kept[i].push_back(pa[k]);
    }
  }
  return Graph(std::move(kept));
}

}  // namespace fctbn
