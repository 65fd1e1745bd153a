#include "fctbn/cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <set>

#include "fctbn/core.hpp"
#include "fctbn/evaluation.hpp"
#include "fctbn/inference.hpp"
#include "fctbn/io.hpp"
#include "fctbn/learner.hpp"
#include "fctbn/pca.hpp"
#include "fctbn/simulation.hpp"

namespace fctbn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{"simulate", "fit",        "cv",          "predict",
                                              "trajectory", "evaluate", "export-graph"};
  return names;
}

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw ValidationError(msg); }

// Config document plus the directory relative paths are resolved against.
struct Config {
  json doc;
  fs::path base;

  bool has(const char* key) const { return doc.contains(key) && !doc.at(key).is_null(); }

  template <class T>
  T get(const char* key) const {
    if (!has(key)) invalid(std::string("config: missing required field '") + key + "'");
    try {
      return doc.at(key).get<T>();
    } catch (const json::exception&) {
      invalid(std::string("config: field '") + key + "' has the wrong type");
    }
  }

  template <class T>
  T get_or(const char* key, T fallback) const {
    return has(key) ? get<T>(key) : fallback;
  }

  fs::path path(const char* key) const { return resolve(get<std::string>(key)); }
  fs::path resolve(const std::string& p) const { return (base / p).lexically_normal(); }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    ok.insert({"command", "out", "seed"});
    for (const auto& [k, v] : doc.items()) {
      if (!ok.count(k)) invalid("config: unknown field '" + k + "'");
    }
  }
};

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) invalid("file not found: " + p.string());
}

// Output directory bookkeeping: files are recorded as they are written so a
// failed run can remove them.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  void open() {
    if (!fs::exists(dir_)) {
      fs::create_directories(dir_);
      created_dir_ = true;
    } else if (!fs::is_directory(dir_)) {
      invalid("output path is not a directory: " + dir_.string());
    }
  }

  fs::path file(const std::string& name) {
    names_.push_back(name);
    return dir_ / name;
  }

  const std::vector<std::string>& names() const { return names_; }
  const fs::path& dir() const { return dir_; }

  void discard() noexcept {
    std::error_code ec;
    for (const auto& n : names_) fs::remove(dir_ / n, ec);
    if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
  }

 private:
  fs::path dir_;
  bool created_dir_ = false;
  std::vector<std::string> names_;
};

json absolute_paths(json doc, const fs::path& base, const std::set<std::string>& path_keys) {
  for (auto& [k, v] : doc.items()) {
    if (path_keys.count(k) && v.is_string()) v = fs::absolute(base / v.get<std::string>()).lexically_normal().string();
  }
  return doc;
}

void write_manifest(Outputs& out, const std::string& command, const Config& cfg,
                    std::optional<std::uint64_t> seed, const std::set<std::string>& path_keys) {
  json config = absolute_paths(cfg.doc, cfg.base, path_keys);
  config.erase("out");
  config.erase("command");
  if (seed) config["seed"] = *seed;
  auto outputs = out.names();
  outputs.push_back("manifest.json");
  json manifest{{"manifest_of", command},
                {"config", config},
                {"seed", seed ? json(*seed) : json(nullptr)},
                {"rng", Rng::kAlgorithm},
                {"version", FCTBN_VERSION},
                {"outputs", outputs}};
  write_json(out.file("manifest.json"), manifest);
}

// ---- Shared config pieces ---------------------------------------------------

CovariateSampler parse_sampler(const json& j) {
  CovariateSampler sampler;
  try {
    for (const auto& f : j.value("factors", json::array())) {
      CovariateFactor factor;
      factor.name = f.at("name").get<std::string>();
      const auto type = f.at("type").get<std::string>();
      if (type == "categorical") {
        factor.kind = CovariateFactor::Kind::kCategorical;
        factor.levels = f.at("levels").get<std::vector<std::string>>();
        factor.probs = f.at("probs").get<std::vector<double>>();
      } else if (type == "uniform") {
        factor.kind = CovariateFactor::Kind::kUniform;
        factor.low = f.at("low").get<double>();
        factor.high = f.at("high").get<double>();
      } else {
        invalid("covariate factor '" + factor.name + "': type must be categorical or uniform");
      }
      sampler.factors.push_back(std::move(factor));
    }
    sampler.baseline_prevalence = j.value("baseline_prevalence", std::vector<double>{});
    sampler.validate();
  } catch (const json::exception& e) {
    invalid(std::string("covariates: ") + e.what());
  } catch (const std::invalid_argument& e) {
    invalid(std::string("covariates: ") + e.what());
  }
  return sampler;
}

std::uint64_t resolve_seed(const Config& cfg, const Invocation& inv) {
  if (inv.seed) return *inv.seed;
  if (!cfg.has("seed")) invalid("a seed is required: set \"seed\" in the config or pass --seed");
  return cfg.get<std::uint64_t>("seed");
}

ModelSpec load_model(const fs::path& p) {
  require_file(p);
  try {
    return read_model(p);
  } catch (const std::exception& e) {
    invalid(e.what());
  }
}

NodeId label_to_node(const std::vector<std::string>& labels, const std::string& label) {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) invalid("unknown node '" + label + "'");
  return static_cast<NodeId>(it - labels.begin());
}

struct LoadedCohort {
  Cohort cohort;
  CohortMetadata meta;
  std::optional<PcaModel> pca;
};

// "cohort" names a directory with events.csv, covariates.csv and
// metadata.json; "raw_covariates" + "encoding" replace covariates.csv, with
// optional "pca_components".
LoadedCohort load_cohort(const Config& cfg) {
  const fs::path dir = cfg.path("cohort");
  const fs::path events = dir / "events.csv";
  const fs::path metadata = dir / "metadata.json";
  require_file(events);
  require_file(metadata);
  LoadedCohort out;
  try {
    out.meta = CohortMetadata::from_json(read_json(metadata));
    auto trajectories = load_events(events, out.meta.labels, out.meta.horizon);
    std::vector<std::pair<std::string, CovariateVector>> rows;
    if (cfg.has("raw_covariates")) {
      const fs::path raw = cfg.path("raw_covariates");
      require_file(raw);
      if (!cfg.has("encoding")) invalid("config: raw_covariates needs an encoding");
      auto matrix = load_covariates(raw, EncodingSpec::from_json(cfg.doc.at("encoding")));
      if (cfg.has("pca_components")) {
        const auto n = cfg.get<std::size_t>("pca_components");
        auto pca = pca_fit_transform(matrix.values, n);
        matrix.values = pca.reduced;
        matrix.column_names = {"intercept"};
        for (std::size_t c = 0; c < n; ++c) matrix.column_names.push_back("pc" + std::to_string(c + 1));
        out.pca = std::move(pca.model);
      }
      rows = to_covariate_rows(matrix);
    } else {
      const fs::path cov = dir / "covariates.csv";
      require_file(cov);
      rows = read_covariate_file(cov);
    }
    out.cohort = assemble_cohort(trajectories, rows, out.meta.labels.size(), out.meta.horizon);
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    invalid(e.what());
  }
  if (out.cohort.size() == 0) invalid("cohort has no subjects");
  return out;
}

Graph parse_graph(const Config& cfg, const std::vector<std::string>& labels) {
  const std::size_t d = labels.size();
  if (!cfg.has("graph")) return Graph::complete(d);
  const json& g = cfg.doc.at("graph");
  if (g.is_string()) {
    const auto name = g.get<std::string>();
    if (name == "complete") return Graph::complete(d);
    if (name == "empty") return Graph::empty(d);
    invalid("config: graph must be \"complete\", \"empty\" or a child -> parents map");
  }
  if (!g.is_object()) invalid("config: graph must be \"complete\", \"empty\" or a child -> parents map");
  std::vector<std::vector<NodeId>> parents(d);
  for (const auto& [child, pa] : g.items()) {
    if (!pa.is_array()) invalid("config: graph entry '" + child + "' must list parent labels");
    for (const auto& p : pa) {
      if (!p.is_string()) invalid("config: graph entry '" + child + "' must list parent labels");
      parents[label_to_node(labels, child)].push_back(label_to_node(labels, p.get<std::string>()));
    }
  }
  try {
    return Graph(std::move(parents));
  } catch (const std::invalid_argument& e) {
    invalid(std::string("config: graph: ") + e.what());
  }
}

PenaltyConfig parse_penalty(const Config& cfg) {
  PenaltyConfig p;
  if (cfg.has("penalty")) {
    const json& j = cfg.doc.at("penalty");
    try {
      if (j.contains("group_size_multiplier")) p.group_size_multiplier = j.at("group_size_multiplier").get<double>();
      p.penalize_baseline = j.value("penalize_baseline", false);
    } catch (const json::exception& e) {
      invalid(std::string("config: penalty: ") + e.what());
    }
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    invalid(std::string("config: penalty: ") + e.what());
  }
  return p;
}

FistaOptions parse_solver(const Config& cfg) {
  FistaOptions o;
  if (!cfg.has("solver")) return o;
  const json& j = cfg.doc.at("solver");
  try {
    o.max_iter = j.value("max_iter", o.max_iter);
    o.tol = j.value("tol", o.tol);
    o.gmm_early_stop = j.value("gmm_early_stop", o.gmm_early_stop);
    o.plateau_tol = j.value("plateau_tol", o.plateau_tol);
    o.plateau_window = j.value("plateau_window", o.plateau_window);
  } catch (const json::exception& e) {
    invalid(std::string("config: solver: ") + e.what());
  }
  if (o.max_iter == 0 || !(o.tol > 0.0)) invalid("config: solver: max_iter and tol must be positive");
  return o;
}

std::vector<double> parse_horizons(const Config& cfg, bool strictly_positive) {
  auto h = cfg.get<std::vector<double>>("horizons");
  if (h.empty()) invalid("config: horizons must not be empty");
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(strictly_positive ? h[i] > 0.0 : h[i] >= 0.0)) invalid("config: horizons must be positive");
    if (i > 0 && !(h[i] > h[i - 1])) invalid("config: horizons must be strictly ascending");
  }
  return h;
}

FitResult fit_model(const ExposureTable& table, double lambda, const PenaltyConfig& base, const FistaOptions& opts,
                    bool adaptive) {
  if (adaptive) return adaptive_fit(table, lambda, base, opts).fit;
  PenaltyConfig p = base;
  p.lambda = lambda;
  return fista_fit(table, p, opts);
}

void write_fit(Outputs& out, const FitResult& fit, const LoadedCohort& data) {
  write_model(out.file("model.json"), fit.to_model(data.meta.labels));
  write_json(out.file("fit.json"), diagnostics_to_json(fit, data.meta.labels));
  if (data.pca) write_json(out.file("pca.json"), data.pca->to_json());
}

// ---- Commands ------------------------------------------------------------------
// Each command validates its inputs and returns the work to run.

using Work = std::function<void(Outputs&, std::ostream&)>;

const std::set<std::string> kPathKeys{"model", "cohort", "raw_covariates", "scores"};

Work simulate_command(const Config& cfg, const Invocation& inv, std::optional<std::uint64_t>& seed_out) {
  cfg.allow({"model", "n_subjects", "horizon", "covariates"});
  ModelSpec spec = load_model(cfg.path("model"));
  const auto n = cfg.get<std::size_t>("n_subjects");
  const auto horizon = cfg.get<double>("horizon");
  if (n == 0) invalid("config: n_subjects must be positive");
  if (!(horizon > 0.0)) invalid("config: horizon must be positive");
  CovariateSampler sampler = parse_sampler(cfg.has("covariates") ? cfg.doc.at("covariates") : json::object());
  if (sampler.encoded_size() != spec.m) {
    invalid("covariate sampler encodes " + std::to_string(sampler.encoded_size()) + " columns but the model has m = " +
            std::to_string(spec.m));
  }
  if (!sampler.baseline_prevalence.empty() && sampler.baseline_prevalence.size() != spec.d) {
    invalid("baseline_prevalence needs one entry per node");
  }
  const std::uint64_t seed = resolve_seed(cfg, inv);
  seed_out = seed;
  return [=](Outputs& out, std::ostream& log) {
    auto sim = simulate_cohort(spec, sampler, n, horizon, seed);
    std::vector<std::string> factor_names;
    for (const auto& f : sampler.factors) factor_names.push_back(f.name);
    write_events(out.file("events.csv"), sim.cohort, spec.labels);
    write_covariates(out.file("covariates.csv"), sim.cohort);
    write_raw_covariates(out.file("raw_covariates.csv"), sim.cohort, factor_names, sim.raw_covariates);
    CohortMetadata md{horizon, seed, sim.rng, spec.d, spec.m, spec.labels};
    write_json(out.file("metadata.json"), md.to_json());
    std::size_t events = 0;
    for (const auto& t : sim.cohort.trajectories) events += t.events.size();
    log << "simulated " << n << " subjects, " << events << " events\n";
  };
}

Work fit_command(const Config& cfg) {
  cfg.allow({"cohort", "raw_covariates", "encoding", "pca_components", "graph", "irreversible", "lambda", "adaptive",
             "penalty", "solver"});
  auto data = std::make_shared<LoadedCohort>(load_cohort(cfg));
  const Graph graph = parse_graph(cfg, data->meta.labels);
  const bool irreversible = cfg.get_or("irreversible", true);
  const double lambda = cfg.get<double>("lambda");
  if (!(lambda >= 0.0)) invalid("config: lambda must be >= 0");
  const bool adaptive = cfg.get_or("adaptive", true);
  const PenaltyConfig penalty = parse_penalty(cfg);
  const FistaOptions opts = parse_solver(cfg);
  return [=](Outputs& out, std::ostream& log) {
    ExposureTable table(data->cohort, graph, irreversible);
    FitResult fit = fit_model(table, lambda, penalty, opts, adaptive);
    write_fit(out, fit, *data);
    log << "lambda " << lambda << ": " << fit.learned_graph.num_edges() << " edges, objective "
        << fit.final_objective() << (fit.converged ? "" : " (not converged)") << "\n";
  };
}

Work cv_command(const Config& cfg, const Invocation& inv, std::optional<std::uint64_t>& seed_out) {
  cfg.allow({"cohort", "raw_covariates", "encoding", "pca_components", "graph", "irreversible", "lambda_grid",
             "folds", "adaptive", "penalty", "solver"});
  auto data = std::make_shared<LoadedCohort>(load_cohort(cfg));
  const Graph graph = parse_graph(cfg, data->meta.labels);
  const bool irreversible = cfg.get_or("irreversible", true);
  const auto grid = cfg.get_or("lambda_grid", default_lambda_grid());
  if (grid.empty()) invalid("config: lambda_grid must not be empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0) || (i > 0 && !(grid[i] > grid[i - 1]))) {
      invalid("config: lambda_grid must be non-negative and strictly ascending");
    }
  }
  const auto folds = cfg.get_or<std::size_t>("folds", 5);
  if (folds < 2 || folds > data->cohort.size()) invalid("config: folds must be in [2, number of subjects]");
  CvOptions opts;
  opts.fista = parse_solver(cfg);
  opts.base = parse_penalty(cfg);
  opts.adaptive = cfg.get_or("adaptive", true);
  const std::uint64_t seed = resolve_seed(cfg, inv);
  seed_out = seed;
  return [=](Outputs& out, std::ostream& log) {
    CvResult cv = cross_validate(data->cohort, graph, irreversible, grid, folds, seed, opts);
    {
      std::ofstream csv(out.file("cv_curve.csv"), std::ios::binary);
      csv << "lambda,mean_error";
      for (std::size_t f = 0; f < folds; ++f) csv << ",fold_" << f + 1;
      csv << '\n';
      for (const auto& pt : cv.curve) {
        csv << format_double(pt.lambda) << ',' << format_double(pt.mean_error);
        for (double e : pt.fold_errors) csv << ',' << format_double(e);
        csv << '\n';
      }
      if (!csv) throw std::runtime_error("cannot write cv_curve.csv");
    }
    ExposureTable table(data->cohort, graph, irreversible);
    FitResult fit = fit_model(table, cv.best_lambda, opts.base, opts.fista, opts.adaptive);
    write_fit(out, fit, *data);
    log << "best lambda " << cv.best_lambda << ", " << fit.learned_graph.num_edges() << " edges\n";
  };
}

Work predict_command(const Config& cfg) {
  cfg.allow({"model", "cohort", "raw_covariates", "encoding", "pca_components", "subjects", "horizons"});
  ModelSpec spec = load_model(cfg.path("model"));
  const auto horizons = parse_horizons(cfg, false);
  struct Subject {
    std::string id;
    CovariateVector z;
    StateVector baseline;
  };
  std::vector<Subject> subjects;
  if (cfg.has("cohort") == cfg.has("subjects")) invalid("config: give exactly one of cohort or subjects");
  if (cfg.has("cohort")) {
    auto data = load_cohort(cfg);
    if (data.meta.labels != spec.labels) invalid("cohort node labels differ from the model's");
    for (std::size_t p = 0; p < data.cohort.size(); ++p) {
      subjects.push_back({data.cohort.trajectories[p].subject_id, data.cohort.covariates[p],
                          data.cohort.trajectories[p].initial_state});
    }
  } else {
    try {
      for (const auto& s : cfg.doc.at("subjects")) {
        Subject sub{s.at("id").get<std::string>(), CovariateVector(s.at("z").get<std::vector<double>>()),
                    StateVector(spec.d)};
        for (const auto& label : s.value("baseline", std::vector<std::string>{})) {
          sub.baseline.set(label_to_node(spec.labels, label), 1);
        }
        subjects.push_back(std::move(sub));
      }
    } catch (const json::exception& e) {
      invalid(std::string("config: subjects: ") + e.what());
    } catch (const std::invalid_argument& e) {
      invalid(std::string("config: subjects: ") + e.what());
    }
  }
  for (const auto& s : subjects) {
    if (s.z.size() != spec.m) invalid("subject '" + s.id + "': covariate length differs from the model's m");
  }
  if (spec.d > kMaxJointNodes) invalid("prediction supports at most 20 nodes");
  return [=](Outputs& out, std::ostream& log) {
    std::vector<std::pair<std::string, std::vector<std::vector<double>>>> tables;
    for (const auto& s : subjects) tables.emplace_back(s.id, predict_onset(spec, s.z, s.baseline, horizons));
    write_score_file(out.file("onset.csv"), tables, horizons, spec.labels);
    log << "scored " << subjects.size() << " subjects at " << horizons.size() << " horizons\n";
  };
}

Work trajectory_command(const Config& cfg) {
  cfg.allow({"model", "prior", "z", "horizon", "grid_step"});
  ModelSpec spec = load_model(cfg.path("model"));
  std::vector<NodeId> prior;
  for (const auto& label : cfg.get_or("prior", std::vector<std::string>{})) {
    prior.push_back(label_to_node(spec.labels, label));
  }
  CovariateVector z;
  try {
    z = CovariateVector(cfg.get<std::vector<double>>("z"));
  } catch (const std::invalid_argument& e) {
    invalid(std::string("config: z: ") + e.what());
  }
  if (z.size() != spec.m) invalid("config: z must have m = " + std::to_string(spec.m) + " entries");
  const auto horizon = cfg.get<double>("horizon");
  const auto step = cfg.get_or("grid_step", 1.0);
  if (!(horizon > 0.0) || !(step > 0.0)) invalid("config: horizon and grid_step must be positive");
  if (spec.d > kMaxJointNodes) invalid("trajectory analysis supports at most 20 nodes");
  return [=](Outputs& out, std::ostream& log) {
    auto curves = emergence_trajectory(spec, z, prior, horizon, step);
    write_risk_curves(out.file("risk_curves.csv"), curves, spec.labels);
    log << curves.size() << " risk curves over " << horizon << " months\n";
  };
}

Work evaluate_command(const Config& cfg) {
  cfg.allow({"model", "scores", "cohort", "raw_covariates", "encoding", "pca_components", "horizons"});
  if (cfg.has("model") == cfg.has("scores")) invalid("config: give exactly one of model or scores");
  auto data = std::make_shared<LoadedCohort>(load_cohort(cfg));
  const auto horizons = parse_horizons(cfg, true);
  std::optional<ModelSpec> spec;
  std::optional<ScoreTable> scores;
  const auto& labels = data->meta.labels;
  if (cfg.has("model")) {
    spec = load_model(cfg.path("model"));
    if (spec->labels != labels) invalid("cohort node labels differ from the model's");
    if (spec->m != data->cohort.num_covariates()) invalid("cohort covariates differ in width from the model's m");
  } else {
    const fs::path p = cfg.path("scores");
    require_file(p);
    try {
      scores = read_score_file(p, labels);
    } catch (const std::exception& e) {
      invalid(e.what());
    }
  }
  return [=](Outputs& out, std::ostream& log) {
    AucTable table = spec ? holdout_evaluate(*spec, data->cohort, horizons)
                          : holdout_evaluate(*scores, labels.size(), data->cohort, horizons);
    write_auc_report(out.file("auc.csv"), table, labels);
    std::size_t defined = 0;
    for (const auto& c : table.cells) defined += c.auc.has_value();
    log << defined << " of " << table.cells.size() << " AUC cells defined\n";
  };
}

Work export_graph_command(const Config& cfg) {
  cfg.allow({"model", "threshold"});
  ModelSpec spec = load_model(cfg.path("model"));
  const auto threshold = cfg.get_or("threshold", 0.0);
  if (!(threshold >= 0.0)) invalid("config: threshold must be >= 0");
  return [=](Outputs& out, std::ostream& log) {
    Graph g = structure_from_coefficients(spec.coeffs, spec.graph, threshold);
    std::ofstream dot(out.file("graph.dot"), std::ios::binary);
    dot << export_graph_dot(g, spec.labels, edge_strengths(spec));
    if (!dot) throw std::runtime_error("cannot write graph.dot");
    log << g.num_edges() << " edges\n";
  };
}

}  // namespace

int dispatch(const Invocation& inv, std::ostream& log, std::ostream& err) {
  std::optional<Outputs> out;
  try {
    const auto& names = commands();
    if (std::find(names.begin(), names.end(), inv.command) == names.end()) {
      invalid("unknown command '" + inv.command + "'");
    }
    require_file(inv.config);
    Config cfg;
    cfg.base = inv.config.has_parent_path() ? inv.config.parent_path() : fs::path(".");
    try {
      std::ifstream in(inv.config, std::ios::binary);
      cfg.doc = json::parse(in);
    } catch (const json::parse_error& e) {
      invalid(inv.config.string() + ": " + e.what());
    }
    if (!cfg.doc.is_object()) invalid("config must be a JSON object");
    // A manifest re-runs its own command.
    if (cfg.doc.contains("manifest_of")) {
      if (!cfg.doc.contains("config") || !cfg.doc.at("config").is_object()) invalid("manifest has no config object");
      if (cfg.doc.at("manifest_of") != inv.command) invalid("manifest was written by a different command");
      cfg.doc = json(cfg.doc.at("config"));
    }
    if (cfg.has("command") && cfg.get<std::string>("command") != inv.command) {
      invalid("config is for command '" + cfg.get<std::string>("command") + "'");
    }

    fs::path out_dir;
    if (inv.out) {
      out_dir = *inv.out;
    } else if (cfg.has("out")) {
      out_dir = cfg.path("out");
    } else {
      invalid("no output directory: set \"out\" in the config or pass --out");
    }

    std::optional<std::uint64_t> seed;
    Work work;
    try {
      if (inv.command == "simulate") work = simulate_command(cfg, inv, seed);
      else if (inv.command == "fit") work = fit_command(cfg);
      else if (inv.command == "cv") work = cv_command(cfg, inv, seed);
      else if (inv.command == "predict") work = predict_command(cfg);
      else if (inv.command == "trajectory") work = trajectory_command(cfg);
      else if (inv.command == "evaluate") work = evaluate_command(cfg);
      else work = export_graph_command(cfg);
    } catch (const ValidationError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      invalid(e.what());
    }

    out.emplace(out_dir);
    out->open();
    work(*out, log);
    write_manifest(*out, inv.command, cfg, seed, kPathKeys);
    log << "wrote " << out->dir().string() << "\n";
    return kExitOk;
  } catch (const ValidationError& e) {
    if (out) out->discard();
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    if (out) out->discard();
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace fctbn::cli
