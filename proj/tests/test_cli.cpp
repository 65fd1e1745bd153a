#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "fctbn/cli.hpp"
#include "fctbn/io.hpp"

using namespace fctbn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Workspace {
  fs::path root;
  Workspace() {
    root = fs::temp_directory_path() / ("fctbn_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(root);
    json truth = {{"d", 3},
                  {"m", 2},
                  {"irreversible", true},
                  {"labels", {"A", "B", "C"}},
                  {"parents", {json::array(), {0}, {1}}},
                  {"beta",
                   {{{{-3.5, 0.5}}, {{0.0, 0.0}}},
                    {{{-4.0, 0.3}, {1.5, 0.0}}, {{0.0, 0.0}, {0.0, 0.0}}},
                    {{{-4.0, -0.4}, {1.5, 0.0}}, {{0.0, 0.0}, {0.0, 0.0}}}}}};
    write_json(root / "truth.json", truth);
    write("simulate.json", {{"model", "truth.json"},
                            {"n_subjects", 300},
                            {"horizon", 36},
                            {"seed", 5},
                            {"covariates",
                             {{"factors", {{{"name", "age"}, {"type", "uniform"}, {"low", -1}, {"high", 1}}}},
                              {"baseline_prevalence", {0.1, 0.05, 0.05}}}},
                            {"out", "cohort"}});
  }
  ~Workspace() { fs::remove_all(root); }

  fs::path write(const std::string& name, const json& cfg) const {
    write_json(root / name, cfg);
    return root / name;
  }

  int run(const std::string& command, const std::string& config, std::optional<fs::path> out = {},
          std::optional<std::uint64_t> seed = {}) const {
    std::ostringstream log, err;
    last_err = std::string();
    cli::Invocation inv{command, root / config, seed, out};
    const int code = cli::dispatch(inv, log, err);
    last_err = err.str();
    return code;
  }
  mutable std::string last_err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("simulate writes its outputs and a manifest") {
  Workspace ws;
  REQUIRE(ws.run("simulate", "simulate.json") == cli::kExitOk);
  for (const char* f : {"events.csv", "covariates.csv", "raw_covariates.csv", "metadata.json", "manifest.json"}) {
    CHECK(fs::exists(ws.root / "cohort" / f));
  }
  json manifest = read_json(ws.root / "cohort" / "manifest.json");
  CHECK(manifest.at("manifest_of") == "simulate");
  CHECK(manifest.at("seed") == 5);
  CHECK(manifest.at("rng") == std::string(Rng::kAlgorithm));
  CHECK_FALSE(manifest.at("config").contains("out"));
  CHECK(fs::path(manifest.at("config").at("model").get<std::string>()).is_absolute());

  // same seed, same bytes; a re-run from the manifest as well
  REQUIRE(ws.run("simulate", "simulate.json", ws.root / "again") == cli::kExitOk);
  REQUIRE(ws.run("simulate", "cohort/manifest.json", ws.root / "replay") == cli::kExitOk);
  for (const char* f : {"events.csv", "covariates.csv", "metadata.json"}) {
    CHECK(slurp(ws.root / "cohort" / f) == slurp(ws.root / "again" / f));
    CHECK(slurp(ws.root / "cohort" / f) == slurp(ws.root / "replay" / f));
  }
  REQUIRE(ws.run("simulate", "simulate.json", ws.root / "other", 6) == cli::kExitOk);
  CHECK(slurp(ws.root / "cohort" / "events.csv") != slurp(ws.root / "other" / "events.csv"));
}

TEST_CASE("validation failures exit with status 1 and leave nothing behind") {
  Workspace ws;
  json cfg = read_json(ws.root / "simulate.json");
  cfg.erase("seed");
  ws.write("noseed.json", cfg);
  CHECK(ws.run("simulate", "noseed.json", ws.root / "x") == cli::kExitValidation);
  CHECK(ws.last_err.find("seed") != std::string::npos);
  CHECK_FALSE(fs::exists(ws.root / "x"));

  cfg = read_json(ws.root / "simulate.json");
  cfg["n_subject"] = 10;
  ws.write("typo.json", cfg);
  CHECK(ws.run("simulate", "typo.json", ws.root / "x") == cli::kExitValidation);
  CHECK(ws.last_err.find("n_subject") != std::string::npos);

  ws.write("fit.json", {{"cohort", "missing"}, {"lambda", 1}});
  CHECK(ws.run("fit", "fit.json", ws.root / "x") == cli::kExitValidation);
  CHECK(ws.run("fit", "nope.json", ws.root / "x") == cli::kExitValidation);
  CHECK(ws.run("bogus", "simulate.json", ws.root / "x") == cli::kExitValidation);
  CHECK(ws.run("fit", "simulate.json", ws.root / "x") == cli::kExitValidation);
  CHECK_FALSE(fs::exists(ws.root / "x"));
}

TEST_CASE("a failure during the run removes partial outputs") {
  Workspace ws;
  fs::create_directories(ws.root / "busy" / "metadata.json");
  std::ofstream(ws.root / "busy" / "metadata.json" / "keep") << "x";
  CHECK(ws.run("simulate", "simulate.json", ws.root / "busy") == cli::kExitRuntime);
  CHECK_FALSE(fs::exists(ws.root / "busy" / "events.csv"));
  CHECK_FALSE(fs::exists(ws.root / "busy" / "covariates.csv"));
  CHECK_FALSE(fs::exists(ws.root / "busy" / "manifest.json"));
  CHECK(fs::exists(ws.root / "busy" / "metadata.json" / "keep"));
}

TEST_CASE("fit, predict, trajectory, evaluate and export-graph") {
  Workspace ws;
  REQUIRE(ws.run("simulate", "simulate.json") == cli::kExitOk);
  ws.write("fit.json", {{"cohort", "cohort"}, {"lambda", 2.0}, {"out", "fit"}});
  REQUIRE(ws.run("fit", "fit.json") == cli::kExitOk);
  CHECK(fs::exists(ws.root / "fit" / "model.json"));
  json diag = read_json(ws.root / "fit" / "fit.json");
  CHECK(diag.at("lambda") == 2.0);
  CHECK(diag.at("objective_trace").size() >= 1);
  REQUIRE(ws.run("fit", "fit.json", ws.root / "fit2") == cli::kExitOk);
  CHECK(slurp(ws.root / "fit" / "model.json") == slurp(ws.root / "fit2" / "model.json"));

  ws.write("traj.json", {{"model", "fit/model.json"},
                         {"prior", {"A"}},
                         {"z", {1.0, 0.2}},
                         {"horizon", 12},
                         {"out", "traj"}});
  REQUIRE(ws.run("trajectory", "traj.json") == cli::kExitOk);
  std::ifstream curves(ws.root / "traj" / "risk_curves.csv");
  std::string header;
  std::getline(curves, header);
  CHECK(header == "time_months,node,probability");
  std::size_t rows = 0;
  for (std::string line; std::getline(curves, line);) rows += !line.empty();
  CHECK(rows == 2 * 13);  // two nodes not in the prior, months 0..12

  ws.write("predict.json", {{"model", "fit/model.json"},
                            {"subjects", {{{"id", "q"}, {"z", {1.0, -0.5}}, {"baseline", {"B"}}}}},
                            {"horizons", {12, 24}},
                            {"out", "pred"}});
  REQUIRE(ws.run("predict", "predict.json") == cli::kExitOk);
  CHECK(fs::exists(ws.root / "pred" / "onset.csv"));

  ws.write("eval.json", {{"model", "fit/model.json"}, {"cohort", "cohort"}, {"horizons", {12, 36}}, {"out", "eval"}});
  REQUIRE(ws.run("evaluate", "eval.json") == cli::kExitOk);
  std::ifstream auc(ws.root / "eval" / "auc.csv");
  std::getline(auc, header);
  CHECK(header == "node,horizon_months,auc,n_pos,n_neg");

  ws.write("graph.json", {{"model", "truth.json"}, {"out", "graph"}});
  REQUIRE(ws.run("export-graph", "graph.json") == cli::kExitOk);
  const std::string dot = slurp(ws.root / "graph" / "graph.dot");
  CHECK(dot.find("\"A\" -> \"B\"") != std::string::npos);
  CHECK(dot.find("\"B\" -> \"C\"") != std::string::npos);
}

TEST_CASE("cv is deterministic given the seed") {
  Workspace ws;
  REQUIRE(ws.run("simulate", "simulate.json") == cli::kExitOk);
  ws.write("cv.json", {{"cohort", "cohort"}, {"lambda_grid", {1, 10}}, {"folds", 3}, {"seed", 2}});
  REQUIRE(ws.run("cv", "cv.json", ws.root / "cv1") == cli::kExitOk);
  REQUIRE(ws.run("cv", "cv.json", ws.root / "cv2") == cli::kExitOk);
  CHECK(slurp(ws.root / "cv1" / "cv_curve.csv") == slurp(ws.root / "cv2" / "cv_curve.csv"));
  CHECK(slurp(ws.root / "cv1" / "model.json") == slurp(ws.root / "cv2" / "model.json"));
}

TEST_CASE("the executable maps errors to exit codes") {
  const char* exe = std::getenv("FCTBN_CLI");
  if (exe == nullptr) return;  // only set when run under ctest
  Workspace ws;
  auto status = [](const std::string& cmd) { return WEXITSTATUS(std::system((cmd + " >/dev/null 2>&1").c_str())); };
  const std::string bin = std::string("\"") + exe + "\"";
  CHECK(status(bin + " --version") == 0);
  CHECK(status(bin + " simulate") == 1);
  CHECK(status(bin + " simulate --config \"" + (ws.root / "simulate.json").string() + "\" --out \"" +
               (ws.root / "bin").string() + "\"") == 0);
  CHECK(fs::exists(ws.root / "bin" / "events.csv"));
}
