#include "fctbn/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace fctbn {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read " + path.string());
  return in;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell.push_back(ch);
    }
  }
  out.push_back(cell);
  return out;
}

// Reads the header line; returns false on an empty stream.
bool read_header(std::istream& in, std::vector<std::string>& header) {
  std::string line;
  if (!std::getline(in, line)) return false;
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  header = split_csv(line);
  return true;
}

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

double parse_double(const std::string& s, std::size_t line, const std::string& what) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || s.empty()) {
    throw std::invalid_argument(at_line(line) + "bad " + what + " '" + s + "'");
  }
  if (!std::isfinite(v)) throw std::invalid_argument(at_line(line) + "non-finite " + what);
  return v;
}

NodeId label_index(const std::vector<std::string>& labels, const std::string& label) {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw std::out_of_range(label);
  return static_cast<NodeId>(it - labels.begin());
}

void check_labels(const std::vector<std::string>& labels, std::size_t d) {
  if (labels.size() != d) throw std::invalid_argument("expected " + std::to_string(d) + " node labels");
}

}  // namespace

// ---- JSON ---------------------------------------------------------------------

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  finish(out, path);
}

json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

json model_to_json(const ModelSpec& spec) {
  json parents = json::array();
  for (NodeId i = 0; i < spec.d; ++i) parents.push_back(spec.graph.parents(i));
  json beta = json::array();
  for (NodeId i = 0; i < spec.d; ++i) {
    json node = json::array();
    for (int s = 0; s < 2; ++s) {
      json rows = json::array();
      for (std::size_t k = 0; k <= spec.graph.parents(i).size(); ++k) {
        auto r = spec.coeffs.row(i, s, k);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
      }
      node.push_back(std::move(rows));
    }
    beta.push_back(std::move(node));
  }
  return json{{"d", spec.d},           {"m", spec.m},         {"irreversible", spec.irreversible},
              {"labels", spec.labels}, {"parents", parents}, {"beta", beta}};
}

ModelSpec model_from_json(const json& j) {
  try {
    const auto d = j.at("d").get<std::size_t>();
    const auto m = j.at("m").get<std::size_t>();
    const bool irreversible = j.value("irreversible", true);
    auto parents = j.at("parents").get<std::vector<std::vector<NodeId>>>();
    if (parents.size() != d) throw std::invalid_argument("model: parents has " + std::to_string(parents.size()) +
                                                         " entries, expected d = " + std::to_string(d));
    Graph graph(std::move(parents));
    CoefficientTensor coeffs(graph, m);
    const json& beta = j.at("beta");
    if (beta.size() != d) throw std::invalid_argument("model: beta must have d entries");
    for (NodeId i = 0; i < d; ++i) {
      if (beta[i].size() != 2) throw std::invalid_argument("model: beta[" + std::to_string(i) + "] needs 2 states");
      for (int s = 0; s < 2; ++s) {
        const json& rows = beta[i][s];
        if (rows.size() != graph.parents(i).size() + 1) {
          throw std::invalid_argument("model: beta[" + std::to_string(i) + "][" + std::to_string(s) +
                                      "] needs one row per parent plus the baseline");
        }
        for (std::size_t k = 0; k < rows.size(); ++k) {
          auto values = rows[k].get<std::vector<double>>();
          if (values.size() != m) throw std::invalid_argument("model: coefficient rows must have m entries");
          std::copy(values.begin(), values.end(), coeffs.row(i, s, k).begin());
        }
      }
    }
    std::vector<std::string> labels;
    if (j.contains("labels")) labels = j.at("labels").get<std::vector<std::string>>();
    return ModelSpec(std::move(graph), std::move(coeffs), irreversible, std::move(labels));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("model: ") + e.what());
  }
}

void write_model(const fs::path& path, const ModelSpec& spec) { write_json(path, model_to_json(spec)); }

ModelSpec read_model(const fs::path& path) { return model_from_json(read_json(path)); }

json diagnostics_to_json(const FitResult& fit, const std::vector<std::string>& labels) {
  json edges = json::array();
  for (const auto& e : fit.learned_graph.edges()) edges.push_back({labels.at(e.from), labels.at(e.to)});
  json j{{"lambda", fit.lambda_used},
         {"objective_trace", fit.objective_trace},
         {"final_objective", fit.final_objective()},
         {"nonzero_groups", fit.nonzero_groups},
         {"penalized_groups", fit.penalized_groups},
         {"sparsity_ratio", fit.sparsity_ratio},
         {"iterations", fit.iterations},
         {"converged", fit.converged},
         {"early_stopped", fit.early_stopped},
         {"learned_edges", edges}};
  if (fit.early_stop) {
    const auto& es = *fit.early_stop;
    json e{{"applied", es.applied},
           {"zeroed", es.zeroed},
           {"objective_before", es.objective_before},
           {"objective_after", es.objective_after}};
    if (es.applied) e["band"] = {es.band_low, es.band_high};
    if (!es.warning.empty()) e["warning"] = es.warning;
    j["gmm_early_stop"] = e;
  }
  return j;
}

// ---- Events -------------------------------------------------------------------

void write_events(std::ostream& out, const Cohort& cohort, const std::vector<std::string>& labels) {
  out << "subject_id,time,node,new_state\n";
  for (const auto& traj : cohort.trajectories) {
    for (NodeId i = 0; i < traj.initial_state.size(); ++i) {
      if (traj.initial_state[i]) out << traj.subject_id << ",0," << labels.at(i) << ",1\n";
    }
    for (const auto& e : traj.events) {
      out << traj.subject_id << ',' << format_double(e.time) << ',' << labels.at(e.node) << ','
          << int(e.new_state) << '\n';
    }
  }
}

void write_events(const fs::path& path, const Cohort& cohort, const std::vector<std::string>& labels) {
  auto out = open_out(path);
  write_events(out, cohort, labels);
  finish(out, path);
}

std::vector<Trajectory> load_events(std::istream& in, const std::vector<std::string>& labels, double horizon) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("horizon must be positive");
  const std::size_t d = labels.size();
  std::vector<std::string> header;
  if (!read_header(in, header)) throw std::invalid_argument("events file is empty (no header)");
  if (header != std::vector<std::string>{"subject_id", "time", "node", "new_state"}) {
    throw std::invalid_argument(at_line(1) + "events header must be subject_id,time,node,new_state");
  }

  std::vector<Trajectory> out;
  std::unordered_map<std::string, std::size_t> index;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != 4) throw std::invalid_argument(at_line(lineno) + "expected 4 fields");
    const std::string& id = cells[0];
    if (id.empty()) throw std::invalid_argument(at_line(lineno) + "empty subject_id");
    const auto where = at_line(lineno) + "subject '" + id + "': ";

    const double t = parse_double(cells[1], lineno, "time");
    NodeId node = 0;
    try {
      node = label_index(labels, cells[2]);
    } catch (const std::out_of_range&) {
      throw std::invalid_argument(where + "unknown node '" + cells[2] + "'");
    }
    if (cells[3] != "0" && cells[3] != "1") throw std::invalid_argument(where + "new_state must be 0 or 1");
    const std::uint8_t state = cells[3] == "1";

    auto [it, inserted] = index.try_emplace(id, out.size());
    if (inserted) {
      Trajectory traj;
      traj.subject_id = id;
      traj.t0 = 0.0;
      traj.t_end = horizon;
      traj.initial_state = StateVector(d);
      out.push_back(std::move(traj));
    }
    Trajectory& traj = out[it->second];

    if (t < 0.0) throw std::invalid_argument(where + "negative time");
    if (t > horizon) throw std::invalid_argument(where + "time " + cells[1] + " beyond the horizon");
    if (t == 0.0) {
      if (!traj.events.empty()) throw std::invalid_argument(where + "time decreases");
      if (state != 1) throw std::invalid_argument(where + "baseline rows must have new_state 1");
      if (traj.initial_state[node]) throw std::invalid_argument(where + "duplicate baseline row");
      traj.initial_state.set(node, 1);
      continue;
    }
    if (!traj.events.empty()) {
      const double prev = traj.events.back().time;
      if (t < prev) throw std::invalid_argument(where + "time decreases");
      if (t == prev) throw std::invalid_argument(where + "duplicate timestamp " + cells[1]);
    }
    const StateVector current = traj.state_at(t);
    if (current[node] == state) {
      throw std::invalid_argument(where + "node '" + cells[2] + "' is already in state " + cells[3]);
    }
    traj.events.push_back({t, node, state});
  }
  for (const auto& traj : out) traj.validate(d);
  return out;
}

std::vector<Trajectory> load_events(const fs::path& path, const std::vector<std::string>& labels, double horizon) {
  auto in = open_in(path);
  try {
    return load_events(in, labels, horizon);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

// ---- Covariates ---------------------------------------------------------------

void write_covariates(const fs::path& path, const Cohort& cohort) {
  auto out = open_out(path);
  const std::size_t m = cohort.num_covariates();
  out << "subject_id";
  for (std::size_t c = 0; c < m; ++c) out << ",z" << c;
  out << '\n';
  for (std::size_t p = 0; p < cohort.size(); ++p) {
    out << cohort.trajectories[p].subject_id;
    for (double v : cohort.covariates[p].values()) out << ',' << format_double(v);
    out << '\n';
  }
  finish(out, path);
}

std::vector<std::pair<std::string, CovariateVector>> read_covariate_file(const fs::path& path) {
  auto in = open_in(path);
  std::vector<std::string> header;
  if (!read_header(in, header)) throw std::invalid_argument(path.string() + ": empty covariate file");
  if (header.size() < 2 || header[0] != "subject_id") {
    throw std::invalid_argument(path.string() + ": covariate header must be subject_id,z0,...");
  }
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c] != "z" + std::to_string(c - 1)) {
      throw std::invalid_argument(path.string() + ": covariate column " + std::to_string(c) + " must be z" +
                                  std::to_string(c - 1));
    }
  }
  std::vector<std::pair<std::string, CovariateVector>> rows;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    const auto where = path.string() + ": " + at_line(lineno);
    if (cells.size() != header.size()) throw std::invalid_argument(where + "wrong number of fields");
    if (!seen.insert(cells[0]).second) throw std::invalid_argument(where + "duplicate subject '" + cells[0] + "'");
    std::vector<double> z;
    for (std::size_t c = 1; c < cells.size(); ++c) z.push_back(parse_double(cells[c], lineno, "covariate"));
    try {
      rows.emplace_back(cells[0], CovariateVector(std::move(z)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + "subject '" + cells[0] + "': " + e.what());
    }
  }
  return rows;
}

void write_raw_covariates(const fs::path& path, const Cohort& cohort, const std::vector<std::string>& factor_names,
                          const std::vector<std::vector<std::string>>& raw) {
  if (raw.size() != cohort.size()) throw std::invalid_argument("one raw covariate row per subject required");
  auto out = open_out(path);
  out << "subject_id";
  for (const auto& n : factor_names) out << ',' << n;
  out << '\n';
  for (std::size_t p = 0; p < cohort.size(); ++p) {
    if (raw[p].size() != factor_names.size()) throw std::invalid_argument("raw covariate row width mismatch");
    out << cohort.trajectories[p].subject_id;
    for (const auto& v : raw[p]) out << ',' << v;
    out << '\n';
  }
  finish(out, path);
}

EncodingSpec EncodingSpec::from_sampler(const CovariateSampler& sampler) {
  EncodingSpec spec;
  for (const auto& f : sampler.factors) {
    ColumnEncoding col;
    col.name = f.name;
    if (f.kind == CovariateFactor::Kind::kCategorical) {
      col.kind = ColumnEncoding::Kind::kCategorical;
      col.levels = f.levels;
    }
    spec.columns.push_back(std::move(col));
  }
  return spec;
}

EncodingSpec EncodingSpec::from_json(const json& j) {
  EncodingSpec spec;
  const json& cols = j.is_object() ? j.at("columns") : j;
  if (!cols.is_array()) throw std::invalid_argument("encoding must be an array of columns");
  for (const auto& c : cols) {
    ColumnEncoding col;
    col.name = c.at("name").get<std::string>();
    const auto type = c.value("type", std::string("numeric"));
    if (type == "categorical") {
      col.kind = ColumnEncoding::Kind::kCategorical;
      col.levels = c.at("levels").get<std::vector<std::string>>();
      if (col.levels.size() < 2) throw std::invalid_argument("categorical column '" + col.name + "' needs 2+ levels");
    } else if (type != "numeric") {
      throw std::invalid_argument("column '" + col.name + "': type must be numeric or categorical");
    }
    spec.columns.push_back(std::move(col));
  }
  return spec;
}

CovariateMatrix load_covariates(std::istream& in, const EncodingSpec& encoding) {
  std::vector<std::string> header;
  if (!read_header(in, header)) throw std::invalid_argument("empty covariate file");
  if (header.empty() || header[0] != "subject_id") throw std::invalid_argument(at_line(1) + "first column must be subject_id");

  std::vector<std::size_t> source;  // header column of each encoded column
  CovariateMatrix out;
  out.column_names.push_back("intercept");
  std::size_t width = 1;
  for (const auto& col : encoding.columns) {
    auto it = std::find(header.begin() + 1, header.end(), col.name);
    if (it == header.end()) throw std::invalid_argument("covariate column '" + col.name + "' not found");
    source.push_back(static_cast<std::size_t>(it - header.begin()));
    if (col.kind == ColumnEncoding::Kind::kNumeric) {
      out.column_names.push_back(col.name);
      ++width;
    } else {
      for (std::size_t l = 1; l < col.levels.size(); ++l) out.column_names.push_back(col.name + "=" + col.levels[l]);
      width += col.levels.size() - 1;
    }
  }

  std::vector<std::vector<double>> rows;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) throw std::invalid_argument(at_line(lineno) + "wrong number of fields");
    const auto where = at_line(lineno) + "subject '" + cells[0] + "': ";
    if (!seen.insert(cells[0]).second) throw std::invalid_argument(where + "duplicate subject");
    std::vector<double> row{1.0};
    for (std::size_t e = 0; e < encoding.columns.size(); ++e) {
      const auto& col = encoding.columns[e];
      const std::string& v = cells[source[e]];
      if (col.kind == ColumnEncoding::Kind::kNumeric) {
        row.push_back(parse_double(v, lineno, col.name));
        continue;
      }
      auto lv = std::find(col.levels.begin(), col.levels.end(), v);
      if (lv == col.levels.end()) throw std::invalid_argument(where + "unknown level '" + v + "' for " + col.name);
      const auto level = static_cast<std::size_t>(lv - col.levels.begin());
      for (std::size_t l = 1; l < col.levels.size(); ++l) row.push_back(l == level ? 1.0 : 0.0);
    }
    out.subject_ids.push_back(cells[0]);
    rows.push_back(std::move(row));
  }
  out.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < width; ++c) out.values(Eigen::Index(r), Eigen::Index(c)) = rows[r][c];
  }
  return out;
}

CovariateMatrix load_covariates(const fs::path& path, const EncodingSpec& encoding) {
  auto in = open_in(path);
  try {
    return load_covariates(in, encoding);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

std::vector<std::pair<std::string, CovariateVector>> to_covariate_rows(const CovariateMatrix& matrix) {
  std::vector<std::pair<std::string, CovariateVector>> rows;
  for (Eigen::Index r = 0; r < matrix.values.rows(); ++r) {
    std::vector<double> z(matrix.values.cols());
    for (Eigen::Index c = 0; c < matrix.values.cols(); ++c) z[c] = matrix.values(r, c);
    rows.emplace_back(matrix.subject_ids.at(r), CovariateVector(std::move(z)));
  }
  return rows;
}

Cohort assemble_cohort(const std::vector<Trajectory>& trajectories,
                       const std::vector<std::pair<std::string, CovariateVector>>& covariates, std::size_t d,
                       double horizon) {
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t p = 0; p < trajectories.size(); ++p) by_id.emplace(trajectories[p].subject_id, p);
  std::set<std::string> covered;
  Cohort cohort;
  for (const auto& [id, z] : covariates) {
    covered.insert(id);
    auto it = by_id.find(id);
    if (it != by_id.end()) {
      cohort.trajectories.push_back(trajectories[it->second]);
    } else {
      Trajectory traj;
      traj.subject_id = id;
      traj.t_end = horizon;
      traj.initial_state = StateVector(d);
      cohort.trajectories.push_back(std::move(traj));
    }
    cohort.covariates.push_back(z);
  }
  for (const auto& traj : trajectories) {
    if (!covered.count(traj.subject_id)) {
      throw std::invalid_argument("subject '" + traj.subject_id + "' has events but no covariate row");
    }
  }
  cohort.validate(d);
  return cohort;
}

// ---- Metadata -----------------------------------------------------------------

json CohortMetadata::to_json() const {
  return json{{"horizon", horizon}, {"seed", seed}, {"rng", rng}, {"d", d}, {"m", m}, {"nodes", labels}};
}

CohortMetadata CohortMetadata::from_json(const json& j) {
  try {
    CohortMetadata md;
    md.horizon = j.at("horizon").get<double>();
    md.seed = j.value("seed", std::uint64_t{0});
    md.rng = j.value("rng", std::string(Rng::kAlgorithm));
    md.d = j.at("d").get<std::size_t>();
    md.m = j.at("m").get<std::size_t>();
    md.labels = j.contains("nodes") ? j.at("nodes").get<std::vector<std::string>>() : default_labels(md.d);
    if (!(md.horizon > 0.0)) throw std::invalid_argument("metadata: horizon must be positive");
    check_labels(md.labels, md.d);
    return md;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("metadata: ") + e.what());
  }
}

// ---- Curves, scores, reports --------------------------------------------------

void write_risk_curves(const fs::path& path, const std::vector<RiskCurve>& curves,
                       const std::vector<std::string>& labels) {
  auto out = open_out(path);
  out << "time_months,node,probability\n";
  for (const auto& c : curves) {
    for (std::size_t t = 0; t < c.times.size(); ++t) {
      out << format_double(c.times[t]) << ',' << labels.at(c.node) << ',' << format_double(c.probability[t]) << '\n';
    }
  }
  finish(out, path);
}

void write_score_file(const fs::path& path,
                      const std::vector<std::pair<std::string, std::vector<std::vector<double>>>>& tables,
                      std::span<const double> horizons, const std::vector<std::string>& labels) {
  auto out = open_out(path);
  out << "subject_id,time_months,node,probability\n";
  for (const auto& [id, table] : tables) {
    for (NodeId i = 0; i < table.size(); ++i) {
      for (std::size_t h = 0; h < horizons.size(); ++h) {
        out << id << ',' << format_double(horizons[h]) << ',' << labels.at(i) << ',' << format_double(table[i][h])
            << '\n';
      }
    }
  }
  finish(out, path);
}

ScoreTable read_score_file(const fs::path& path, const std::vector<std::string>& labels) {
  auto in = open_in(path);
  std::vector<std::string> header;
  const auto name = path.string() + ": ";
  if (!read_header(in, header) ||
      header != std::vector<std::string>{"subject_id", "time_months", "node", "probability"}) {
    throw std::invalid_argument(name + "score header must be subject_id,time_months,node,probability");
  }
  ScoreTable table;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != 4) throw std::invalid_argument(name + at_line(lineno) + "expected 4 fields");
    NodeId node = 0;
    try {
      node = label_index(labels, cells[2]);
    } catch (const std::out_of_range&) {
      throw std::invalid_argument(name + at_line(lineno) + "unknown node '" + cells[2] + "'");
    }
    table.set(cells[0], node, parse_double(cells[1], lineno, "time_months"),
              parse_double(cells[3], lineno, "probability"));
  }
  return table;
}

void write_auc_report(const fs::path& path, const AucTable& table, const std::vector<std::string>& labels) {
  auto out = open_out(path);
  out << "node,horizon_months,auc,n_pos,n_neg\n";
  for (const auto& cell : table.cells) {
    out << labels.at(cell.node) << ',' << format_double(cell.horizon_months) << ','
        << (cell.auc ? format_double(*cell.auc) : std::string()) << ',' << cell.n_pos << ',' << cell.n_neg << '\n';
  }
  finish(out, path);
}

// ---- Graph export -------------------------------------------------------------

namespace {

std::string dot_id(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out.push_back('\\');
    out.push_back(ch);
  }
  return out + "\"";
}

}  // namespace

std::string export_graph_dot(const Graph& graph, const std::vector<std::string>& labels,
                             const std::map<std::pair<NodeId, NodeId>, double>& strengths) {
  check_labels(labels, graph.num_nodes());
  double max_strength = 0.0;
  for (const auto& [edge, s] : strengths) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("edge strengths must be finite and >= 0");
    if (graph.has_edge(edge.first, edge.second)) max_strength = std::max(max_strength, s);
  }
  std::ostringstream out;
  out << "digraph fctbn {\n";
  for (NodeId i = 0; i < graph.num_nodes(); ++i) out << "  " << dot_id(labels[i]) << ";\n";
  for (const auto& e : graph.edges()) {
    double width = 1.0;
    auto it = strengths.find({e.from, e.to});
    if (it != strengths.end() && max_strength > 0.0) width = 5.0 * it->second / max_strength;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", width);
    out << "  " << dot_id(labels[e.from]) << " -> " << dot_id(labels[e.to]) << " [penwidth=" << buf << "];\n";
  }
  out << "}\n";
  return out.str();
}

std::map<std::pair<NodeId, NodeId>, double> edge_strengths(const ModelSpec& spec) {
  std::map<std::pair<NodeId, NodeId>, double> out;
  for (NodeId i = 0; i < spec.d; ++i) {
    const auto& pa = spec.graph.parents(i);
    for (std::size_t k = 0; k < pa.size(); ++k) {
      double sq = 0.0;
      for (int s = 0; s < 2; ++s) {
        const double n = spec.coeffs.row_norm(i, s, k + 1);
        sq += n * n;
      }
      out[{pa[k], i}] = std::sqrt(sq);
    }
  }
  return out;
}

}  // namespace fctbn
