#include "fctbn/likelihood.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

namespace fctbn {

std::vector<Segment> decompose_segments(const Cohort& cohort, const Graph& graph) {
  const std::size_t d = graph.num_nodes();
  std::vector<Segment> out;
  for (std::size_t p = 0; p < cohort.trajectories.size(); ++p) {
    const Trajectory& traj = cohort.trajectories[p];
    if (traj.initial_state.size() != d) {
      throw std::invalid_argument("subject '" + traj.subject_id + "': state length does not match graph");
    }
    for (const auto& e : traj.events) {
      if (e.node >= d) {
        throw std::invalid_argument("subject '" + traj.subject_id + "': event references unknown node " +
                                    std::to_string(e.node));
      }
    }
    for (NodeId i = 0; i < d; ++i) {
      const auto& pa = graph.parents(i);
      StateVector state = traj.initial_state;
      const auto current_mask = [&] {
        std::uint32_t mask = 0;
        for (std::size_t k = 0; k < pa.size(); ++k) {
          if (state[pa[k]]) mask |= (1u << k);
        }
        return mask;
      };
      double start = traj.t0;
      for (const auto& e : traj.events) {
        const bool own = e.node == i;
        const bool parent = !own && graph.parent_position(i, e.node) >= 0;
        if (own || parent) {
          out.push_back({p, i, state[i], current_mask(), e.time - start, own});
          start = e.time;
        }
        state.set(e.node, e.new_state);
      }
      if (traj.t_end > start) {
        out.push_back({p, i, state[i], current_mask(), traj.t_end - start, false});
      }
    }
  }
  return out;
}

SufficientStats::SufficientStats(const Graph& graph) {
  const std::size_t d = graph.num_nodes();
  num_configs_.resize(d);
  offset_.resize(d);
  std::size_t total = 0;
  for (NodeId i = 0; i < d; ++i) {
    num_configs_[i] = std::size_t{1} << graph.parents(i).size();
    offset_[i] = total;
    total += 2 * num_configs_[i];
  }
  t_.assign(total, 0.0);
  m_.assign(total, 0);
}

std::size_t SufficientStats::index(NodeId i, int s, std::uint32_t config) const {
  if (i >= num_configs_.size() || (s != 0 && s != 1) || config >= num_configs_[i]) {
    throw std::out_of_range("sufficient-statistics cell out of range");
  }
  return offset_[i] + static_cast<std::size_t>(s) * num_configs_[i] + config;
}

SufficientStats& SufficientStats::operator+=(const SufficientStats& other) {
  if (other.num_configs_ != num_configs_) {
    throw std::invalid_argument("sufficient statistics of different graphs cannot be added");
  }
  for (std::size_t a = 0; a < t_.size(); ++a) {
    t_[a] += other.t_[a];
    m_[a] += other.m_[a];
  }
  return *this;
}

SufficientStats sufficient_stats(const Graph& graph, std::span<const Segment> segments) {
  SufficientStats stats(graph);
  for (const auto& seg : segments) {
    stats.dwell(seg.node, seg.state, seg.on_parents) += seg.dwell;
    if (seg.terminated) ++stats.exits(seg.node, seg.state, seg.on_parents);
  }
  return stats;
}

std::optional<double> RateTable::at(NodeId i, int s, std::uint32_t config) const {
  const auto& node = rates.at(i);
  const std::size_t configs = node.size() / 2;
  return node.at(static_cast<std::size_t>(s) * configs + config);
}

RateTable mle_intensities(const SufficientStats& stats) {
  RateTable table;
  table.rates.resize(stats.num_nodes());
  for (NodeId i = 0; i < stats.num_nodes(); ++i) {
    const std::size_t configs = stats.num_configs(i);
    auto& node = table.rates[i];
    node.resize(2 * configs);
    for (int s = 0; s < 2; ++s) {
      for (std::uint32_t u = 0; u < configs; ++u) {
        const double t = stats.dwell(i, s, u);
        if (t > 0.0) {
          node[s * configs + u] = static_cast<double>(stats.exits(i, s, u)) / t;
        }
      }
    }
  }
  return table;
}

ExposureTable::ExposureTable(const Cohort& cohort, const Graph& graph, bool irreversible)
    : graph_(graph),
      covariates_(cohort.covariates),
      irreversible_(irreversible),
      m_(cohort.num_covariates()) {
  if (cohort.trajectories.size() != cohort.covariates.size()) {
    throw std::invalid_argument("cohort needs exactly one covariate vector per trajectory");
  }
  subject_ids_.reserve(cohort.size());
  for (const auto& t : cohort.trajectories) subject_ids_.push_back(t.subject_id);

  const std::size_t d = graph.num_nodes();
  block_index_.assign(2 * d, -1);
  for (NodeId i = 0; i < d; ++i) {
    for (int s = 0; s < 2; ++s) {
      if (irreversible && s == 1) continue;
      block_index_[2 * i + s] = static_cast<int>(blocks_.size());
      blocks_.push_back({i, s, {}});
    }
  }

  std::vector<std::map<std::pair<std::size_t, std::uint32_t>, Row>> cells(blocks_.size());
  for (const auto& seg : decompose_segments(cohort, graph)) {
    const int b = block_index_[2 * seg.node + seg.state];
    if (b < 0) continue;
    auto [it, inserted] = cells[b].try_emplace({seg.subject, seg.on_parents},
                                               Row{seg.subject, seg.on_parents, 0.0, 0.0});
    it->second.exposure += seg.dwell;
    if (seg.terminated) it->second.exits += 1.0;
  }
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    blocks_[b].rows.reserve(cells[b].size());
    for (auto& [key, row] : cells[b]) blocks_[b].rows.push_back(row);
  }
}

bool ExposureTable::has_block(NodeId i, int s) const {
  return i < graph_.num_nodes() && (s == 0 || s == 1) && block_index_[2 * i + s] >= 0;
}

const ExposureTable::Block& ExposureTable::block(NodeId i, int s) const {
  if (!has_block(i, s)) throw std::out_of_range("no exposure block for this (node, state)");
  return blocks_[block_index_[2 * i + s]];
}

double ExposureTable::block_log_likelihood(const Block& block, std::span<const double> theta,
                                           std::span<double> grad) const {
  const std::size_t m = m_;
  const std::size_t p = graph_.parents(block.node).size();
  if (theta.size() != (p + 1) * m || (!grad.empty() && grad.size() != theta.size())) {
    throw std::invalid_argument("coefficient block has the wrong size");
  }
  double total = 0.0;
  for (const auto& row : block.rows) {
    const auto z = covariates_[row.subject].values();
    double eta = 0.0;
    for (std::size_t k = 0; k <= p; ++k) {
      if (k > 0 && !(row.on_parents & (1u << (k - 1)))) continue;
      const double* beta = theta.data() + k * m;
      for (std::size_t c = 0; c < m; ++c) eta += z[c] * beta[c];
    }
    if (eta > kMaxLogRate) {
      eta = kMaxLogRate;
      ++clamp_count_;
    }
    const double rate = std::exp(eta);
    const double term = row.exits * eta - row.exposure * rate;
    if (!std::isfinite(term)) {
      throw std::domain_error("non-finite log-likelihood term for subject '" + subject_ids_[row.subject] +
                              "', node " + std::to_string(block.node) + ", state " +
                              std::to_string(block.state) + ", parent mask " +
                              std::to_string(row.on_parents));
    }
    total += term;
    if (!grad.empty()) {
      const double w = row.exits - row.exposure * rate;
      for (std::size_t k = 0; k <= p; ++k) {
        if (k > 0 && !(row.on_parents & (1u << (k - 1)))) continue;
        double* g = grad.data() + k * m;
        for (std::size_t c = 0; c < m; ++c) g[c] += w * z[c];
      }
    }
  }
  return total;
}

namespace {

void check_shape(const ExposureTable& table, const CoefficientTensor& coeffs) {
  const Graph& g = table.graph();
  if (coeffs.num_nodes() != g.num_nodes()) {
    throw std::invalid_argument("coefficient tensor node count does not match graph");
  }
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    if (coeffs.num_parents(i) != g.parents(i).size()) {
      throw std::invalid_argument("coefficient tensor parent count does not match graph");
    }
  }
  if (!table.covariates().empty() && coeffs.num_covariates() != table.num_covariates()) {
    throw std::invalid_argument("coefficient tensor covariate count does not match cohort");
  }
}

}  // namespace

double ExposureTable::log_likelihood(const CoefficientTensor& coeffs) const {
  check_shape(*this, coeffs);
  double total = 0.0;
  for (const auto& b : blocks_) {
    total += block_log_likelihood(b, coeffs.block(b.node, b.state), {});
  }
  return total;
}

CoefficientTensor ExposureTable::gradient(const CoefficientTensor& coeffs) const {
  check_shape(*this, coeffs);
  CoefficientTensor grad(graph_, coeffs.num_covariates());
  for (const auto& b : blocks_) {
    block_log_likelihood(b, coeffs.block(b.node, b.state), grad.block(b.node, b.state));
  }
  return grad;
}

double log_likelihood(const ModelSpec& model, const Cohort& cohort) {
  if (cohort.size() == 0) return 0.0;
  return ExposureTable(cohort, model.graph, model.irreversible).log_likelihood(model.coeffs);
}

CoefficientTensor gradient(const ModelSpec& model, const Cohort& cohort) {
  if (cohort.size() == 0) return CoefficientTensor(model.graph, model.m);
  return ExposureTable(cohort, model.graph, model.irreversible).gradient(model.coeffs);
}

}  // namespace fctbn
