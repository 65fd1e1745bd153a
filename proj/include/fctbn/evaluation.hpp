#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fctbn/core.hpp"
#include "fctbn/simulation.hpp"

namespace fctbn {

// Mann-Whitney AUC: (concordant + 0.5 * tied) / (positives * negatives).
// Throws std::invalid_argument unless both classes are present.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct AucCell {
  NodeId node;
  double horizon_months;
  std::optional<double> auc;  // unset when a class is missing
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

struct AucTable {
  std::vector<AucCell> cells;  // node-major, horizons ascending
  const AucCell& at(NodeId node, std::size_t horizon_index) const;
  std::size_t num_horizons = 0;
};

// External scores keyed by (subject_id, node, horizon).
class ScoreTable {
 public:
  void set(const std::string& subject, NodeId node, double horizon, double probability);
  // Throws std::invalid_argument if no score was recorded.
  double get(const std::string& subject, NodeId node, double horizon) const;
  bool empty() const { return scores_.empty(); }

 private:
  std::map<std::string, std::map<std::pair<NodeId, double>, double>> scores_;
};

// Onset AUC per (node, horizon). For every subject, scores come from
// predict_onset at the subject's baseline state; the label is the node's
// state at the horizon. Subjects ON at baseline are excluded from that node's
// cells, and subjects observed for less than the horizon from that horizon's.
AucTable holdout_evaluate(const ModelSpec& spec, const Cohort& test, std::span<const double> horizons);

// Same protocol with scores supplied by an external predictor.
AucTable holdout_evaluate(const ScoreTable& scores, std::size_t d, const Cohort& test,
                          std::span<const double> horizons);

}  // namespace fctbn
