#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "fctbn/core.hpp"
#include "fctbn/evaluation.hpp"
#include "fctbn/inference.hpp"
#include "fctbn/learner.hpp"
#include "fctbn/pca.hpp"
#include "fctbn/simulation.hpp"

namespace fctbn {

// %.17g; round-trips every finite double.
std::string format_double(double v);

// ---- ModelSpec JSON -------------------------------------------------------
// {d, m, irreversible, labels, parents: [[...]], beta: [i][s][k][c]}
nlohmann::json model_to_json(const ModelSpec& spec);
ModelSpec model_from_json(const nlohmann::json& j);
void write_model(const std::filesystem::path& path, const ModelSpec& spec);
ModelSpec read_model(const std::filesystem::path& path);

// {lambda, objective_trace, nonzero_groups, penalized_groups, sparsity_ratio,
//  iterations, converged, early_stopped, learned_edges}
nlohmann::json diagnostics_to_json(const FitResult& fit, const std::vector<std::string>& labels);

// Writes JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

// ---- Cohort files ----------------------------------------------------------
// Events CSV `subject_id,time,node,new_state`. Rows at time 0 with
// new_state 1 declare conditions present at baseline; all other rows are
// transitions in (0, horizon].
void write_events(std::ostream& out, const Cohort& cohort, const std::vector<std::string>& labels);
void write_events(const std::filesystem::path& path, const Cohort& cohort, const std::vector<std::string>& labels);

// Trajectories in order of first appearance. Errors name the subject and the
// 1-based line number.
std::vector<Trajectory> load_events(const std::filesystem::path& path, const std::vector<std::string>& labels,
                                    double horizon);
std::vector<Trajectory> load_events(std::istream& in, const std::vector<std::string>& labels, double horizon);

// Covariate CSV `subject_id,z0,z1,...` with z0 == 1.
void write_covariates(const std::filesystem::path& path, const Cohort& cohort);
std::vector<std::pair<std::string, CovariateVector>> read_covariate_file(const std::filesystem::path& path);

// Raw risk-factor CSV `subject_id,<factor names...>`.
void write_raw_covariates(const std::filesystem::path& path, const Cohort& cohort,
                          const std::vector<std::string>& factor_names,
                          const std::vector<std::vector<std::string>>& raw);

struct ColumnEncoding {
  enum class Kind { kCategorical, kNumeric };
  std::string name;
  Kind kind = Kind::kNumeric;
  std::vector<std::string> levels;  // categorical; first level is the reference
};

struct EncodingSpec {
  std::vector<ColumnEncoding> columns;
  static EncodingSpec from_sampler(const CovariateSampler& sampler);
  static EncodingSpec from_json(const nlohmann::json& j);
};

struct CovariateMatrix {
  std::vector<std::string> subject_ids;
  std::vector<std::string> column_names;  // "intercept" first
  Eigen::MatrixXd values;                 // column 0 is all ones
};

// Reference-coded one-hot for categorical columns (first level dropped),
// numeric columns passed through, intercept prepended.
CovariateMatrix load_covariates(const std::filesystem::path& path, const EncodingSpec& encoding);
CovariateMatrix load_covariates(std::istream& in, const EncodingSpec& encoding);

// Pairs trajectories with covariates by subject id, in covariate order.
// Subjects with covariates but no event rows get event-free trajectories
// over [0, horizon]; an event subject without covariates is an error.
Cohort assemble_cohort(const std::vector<Trajectory>& trajectories,
                       const std::vector<std::pair<std::string, CovariateVector>>& covariates, std::size_t d,
                       double horizon);

std::vector<std::pair<std::string, CovariateVector>> to_covariate_rows(const CovariateMatrix& matrix);

// Metadata sidecar {horizon, seed, rng, d, m, labels}.
struct CohortMetadata {
  double horizon = 0.0;
  std::uint64_t seed = 0;
  std::string rng = Rng::kAlgorithm;
  std::size_t d = 0;
  std::size_t m = 0;
  std::vector<std::string> labels;

  nlohmann::json to_json() const;
  static CohortMetadata from_json(const nlohmann::json& j);
};

// ---- Risk curves, onset tables, AUC reports ---------------------------------
// `time_months,node,probability`
void write_risk_curves(const std::filesystem::path& path, const std::vector<RiskCurve>& curves,
                       const std::vector<std::string>& labels);

// `subject_id,time_months,node,probability` (risk-curve rows keyed by subject).
void write_score_file(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, std::vector<std::vector<double>>>>& tables,
                      std::span<const double> horizons, const std::vector<std::string>& labels);
ScoreTable read_score_file(const std::filesystem::path& path, const std::vector<std::string>& labels);

// `node,horizon_months,auc,n_pos,n_neg`; undefined cells have an empty auc.
void write_auc_report(const std::filesystem::path& path, const AucTable& table,
                      const std::vector<std::string>& labels);

// ---- Graph export -----------------------------------------------------------
// DOT digraph listing every node, then one statement per edge with penwidth
// proportional to its strength (strongest edge = 5).
std::string export_graph_dot(const Graph& graph, const std::vector<std::string>& labels,
                             const std::map<std::pair<NodeId, NodeId>, double>& strengths = {});

// Edge strength = L2 norm of the edge's coefficient groups over both states.
std::map<std::pair<NodeId, NodeId>, double> edge_strengths(const ModelSpec& spec);

}  // namespace fctbn
