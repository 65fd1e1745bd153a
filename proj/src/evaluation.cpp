#include "fctbn/evaluation.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "fctbn/inference.hpp"

namespace fctbn {

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("scores and labels differ in length");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double pos = 0.0;
  double neg = 0.0;
  double concordant = 0.0;  // counts ties as 1/2
  double neg_below = 0.0;
  std::size_t a = 0;
  while (a < order.size()) {
    std::size_t b = a;
    double tie_pos = 0.0;
    double tie_neg = 0.0;
    while (b < order.size() && scores[order[b]] == scores[order[a]]) {
      if (labels[order[b]] > 1) throw std::invalid_argument("labels must be 0 or 1");
      (labels[order[b]] ? tie_pos : tie_neg) += 1.0;
      ++b;
    }
    concordant += tie_pos * (neg_below + 0.5 * tie_neg);
    neg_below += tie_neg;
    pos += tie_pos;
    neg += tie_neg;
    a = b;
  }
  if (pos == 0.0 || neg == 0.0) {
    throw std::invalid_argument("AUC needs at least one positive and one negative label");
  }
  return concordant / (pos * neg);
}

const AucCell& AucTable::at(NodeId node, std::size_t horizon_index) const {
  return cells.at(node * num_horizons + horizon_index);
}

void ScoreTable::set(const std::string& subject, NodeId node, double horizon, double probability) {
  scores_[subject][{node, horizon}] = probability;
}

double ScoreTable::get(const std::string& subject, NodeId node, double horizon) const {
  auto s = scores_.find(subject);
  if (s != scores_.end()) {
    auto it = s->second.find({node, horizon});
    if (it != s->second.end()) return it->second;
  }
  throw std::invalid_argument("no score for subject '" + subject + "', node " + std::to_string(node) +
                              ", horizon " + std::to_string(horizon));
}

namespace {

template <class ScoreFn>
AucTable evaluate_with(std::size_t d, const Cohort& test, std::span<const double> horizons, ScoreFn&& score) {
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    if (!(horizons[h] > 0.0)) throw std::invalid_argument("evaluation horizons must be positive");
    if (h > 0 && horizons[h] <= horizons[h - 1]) throw std::invalid_argument("horizons must be ascending");
  }
  const std::size_t nh = horizons.size();
  std::vector<std::vector<double>> cell_scores(d * nh);
  std::vector<std::vector<std::uint8_t>> cell_labels(d * nh);
  for (std::size_t p = 0; p < test.size(); ++p) {
    const Trajectory& traj = test.trajectories[p];
    const auto table = score(p);  // [node][horizon]
    for (std::size_t h = 0; h < nh; ++h) {
      if (traj.t_end < horizons[h]) continue;
      const StateVector later = traj.state_at(horizons[h]);
      for (NodeId i = 0; i < d; ++i) {
        if (traj.initial_state[i]) continue;
        cell_scores[i * nh + h].push_back(table[i][h]);
        cell_labels[i * nh + h].push_back(later[i]);
      }
    }
  }
  AucTable out;
  out.num_horizons = nh;
  for (NodeId i = 0; i < d; ++i) {
    for (std::size_t h = 0; h < nh; ++h) {
      const auto& labels = cell_labels[i * nh + h];
      AucCell cell{i, horizons[h], std::nullopt, 0, 0};
      cell.n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
      cell.n_neg = labels.size() - cell.n_pos;
      if (cell.n_pos > 0 && cell.n_neg > 0) cell.auc = roc_auc(cell_scores[i * nh + h], labels);
      out.cells.push_back(cell);
    }
  }
  return out;
}

}  // namespace

AucTable holdout_evaluate(const ModelSpec& spec, const Cohort& test, std::span<const double> horizons) {
  test.validate(spec.d);
  return evaluate_with(spec.d, test, horizons, [&](std::size_t p) {
    return predict_onset(spec, test.covariates[p], test.trajectories[p].initial_state, horizons);
  });
}

AucTable holdout_evaluate(const ScoreTable& scores, std::size_t d, const Cohort& test,
                          std::span<const double> horizons) {
  test.validate(d);
  return evaluate_with(d, test, horizons, [&](std::size_t p) {
    const std::string& id = test.trajectories[p].subject_id;
    std::vector<std::vector<double>> table(d, std::vector<double>(horizons.size(), 0.0));
    for (NodeId i = 0; i < d; ++i) {
      if (test.trajectories[p].initial_state[i]) continue;
      for (std::size_t h = 0; h < horizons.size(); ++h) table[i][h] = scores.get(id, i, horizons[h]);
    }
    return table;
  });
}

}  // namespace fctbn
