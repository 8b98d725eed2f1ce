#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ctmg/cli.hpp"
#include "ctmg/combination.hpp"
#include "ctmg/config.hpp"
#include "ctmg/parallel.hpp"
#include "ctmg/problems.hpp"
#include "ctmg/runner.hpp"

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace ctmg;
namespace fs = std::filesystem;

namespace {

std::string validation_message(const std::string& json_text) {
  try {
    parse_config(json_text);
  } catch (const std::invalid_argument& e) {
    return e.what();
  }
  return "";
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  REQUIRE(out.good());
}

RunConfig tiny_heat() {
  RunConfig cfg;
  cfg.problem = ProblemKind::heat;
  cfg.d = 2;
  cfg.t_end = 0.25;
  cfg.L = 4;
  cfg.L0 = 1;
  cfg.S = 4;
  cfg.steps = 8;
  cfg.steps_hat = 0;
  cfg.segments = 2;
  cfg.probe_point = {0.5, 0.5};
  return cfg;
}

}  // namespace

TEST_CASE("an empty config parses to the documented defaults and round trips") {
  RunConfig cfg = parse_config("{}");
  CHECK(cfg.problem == ProblemKind::heat);
  CHECK(cfg.d == 2);
  CHECK(cfg.L == 5);
  CHECK(cfg.L0 == 1);
  CHECK(cfg.steps == 0);
  CHECK(cfg.steps_hat == 1);
  CHECK(total_steps(cfg) == 10);
  CHECK(cfg.algorithm == Algorithm::sequential_ct);
  CHECK(cfg.variant == VariantChoice::automatic);

  // The normalized echo is a fixed point of parse + serialize.
  std::string echoed = config_json(cfg);
  RunConfig again = parse_config(echoed);
  CHECK(config_json(again) == echoed);
  CHECK(total_steps(again) == 10);
  CHECK(again.steps == 10);

  // Fixed-dimension problems fill d on their own.
  RunConfig osc = parse_config(R"({"problem": {"kind": "oscillator"}, "space": {"L0": 4, "L": 9}})");
  CHECK(problem_dim(osc) == 2);
  RunConfig coupled = parse_config(
      R"({"problem": {"kind": "coupled_oscillators"}, "space": {"L": 8, "L0": 2}})");
  CHECK(problem_dim(coupled) == 4);
}

TEST_CASE("config validation is field precise and runs before any work") {
  CHECK(validation_message(R"({"space": {"L": 4, "L0": 6}})").find("space.L0") !=
        std::string::npos);
  CHECK(validation_message(R"({"nonsense": {}})").find("unknown key \"nonsense\"") !=
        std::string::npos);
  CHECK(validation_message(R"({"space": {"LL": 3}})").find("unknown key \"space.LL\"") !=
        std::string::npos);
  CHECK(validation_message(R"({"space": {"L": "five"}})").find("space.L must be an integer") !=
        std::string::npos);
  CHECK(validation_message(R"({"time": {"steps": 8, "steps_hat": 2}})")
            .find("mutually exclusive") != std::string::npos);
  CHECK(validation_message(R"({"time": {"steps": 9, "segments": 2}})")
            .find("divisible by time.segments") != std::string::npos);
  CHECK(validation_message(
            R"({"mgrit": {"coarsening": 1}, "run": {"algorithm": "ctmgrit_loc"}})")
            .find("mgrit.coarsening must be at least 2") != std::string::npos);
  CHECK(validation_message(
            R"({"time": {"steps": 10}, "mgrit": {"coarsening": 4}, "run": {"algorithm": "ctmgrit_sg"}})")
            .find("divisible by mgrit.coarsening") != std::string::npos);
  CHECK(validation_message(R"({"problem": {"kind": "oscillator", "d": 3}})")
            .find("problem.d is fixed to 2") != std::string::npos);
  CHECK(validation_message(R"({"problem": {"kind": "warp"}})").find("problem.kind") !=
        std::string::npos);
  CHECK(validation_message(R"({"probe": {"point": [0.5]}})").find("coordinates") !=
        std::string::npos);
  CHECK(validation_message(R"({"probe": {"point": [0.5, 1.5]}})")
            .find("inside the problem domain") != std::string::npos);
  CHECK(validation_message(R"({"ssa": {"trajectories": 10}})")
            .find("reaction network") != std::string::npos);
  CHECK(validation_message(R"({"problem": {"kind": "coupled_oscillators"}, "space": {"L": 5, "L0": 5}})")
            .find("combination scheme empty") != std::string::npos);
  CHECK(validation_message("{cursed").find("not valid JSON") != std::string::npos);
  CHECK(validation_message(R"({"run": {"algorithm": "magic"}})").find("run.algorithm") !=
        std::string::npos);
}

TEST_CASE("a heat run writes the complete artifact set") {
  RunConfig cfg = tiny_heat();
  fs::path dir = "harness_out/heat_artifacts";
  RunReport report = run_experiment(cfg, dir.string());

  CHECK(fs::exists(dir / "summary.json"));
  CHECK(fs::exists(dir / "errors.csv"));
  CHECK(fs::exists(dir / "probe.csv"));
  CHECK(fs::exists(dir / "diagnostics.csv"));

  REQUIRE(!report.errors.empty());
  CHECK(report.errors[0].oracle == "manufactured");
  CHECK(report.errors[0].metric == "max_abs_sampled");
  CHECK(report.errors[0].value < 0.05);
  CHECK(report.probe.size() == 3);  // one row per recombination time
  CHECK(report.probe.front().t == 0.0);
  CHECK(report.probe.back().t == doctest::Approx(0.25));

  // Task accounting in the summary matches the plan arithmetic.
  RunPlan plan = plan_resources(CombinationScheme::build(2, cfg.L, cfg.L0, Box::unit(2)), cfg.S,
                                cfg.temporal_tasks, 0.0, cfg.t_end, cfg.steps, cfg.segments,
                                cfg.coarsening);
  CHECK(report.local_tasks == plan.loc_task_count());
  CHECK(report.block_tasks == plan.sg_task_count());

  auto summary = nlohmann::json::parse(read_file(dir / "summary.json"));
  CHECK(summary.at("schema") == "ctmgrit-run-1");
  CHECK(summary.at("results").at("subproblems").get<int>() == report.subproblems);
  CHECK(summary.at("results").at("errors").size() == report.errors.size());
  CHECK(summary.contains("metadata"));

  std::string probe_csv = read_file(dir / "probe.csv");
  CHECK(probe_csv.rfind("t,computed,analytical,abs_error\r\n", 0) == 0);
  std::string errors_csv = read_file(dir / "errors.csv");
  CHECK(errors_csv.find("manufactured,max_abs_sampled,") != std::string::npos);
}

TEST_CASE("the probe series starts at the recombined initial state") {
  RunConfig cfg = tiny_heat();
  RunReport report = execute(cfg);

  CombinationScheme scheme = CombinationScheme::build(2, cfg.L, cfg.L0, Box::unit(2));
  BlockVector states = project_pointwise(
      scheme, [](const std::vector<Real>& x) { return heat_exact_solution(x, 0.0); });
  SharedNodeMap shared(scheme);
  recombine(scheme, shared, states);
  Real expected = evaluate_combined(scheme, states, cfg.probe_point);

  REQUIRE(!report.probe.empty());
  CHECK(report.probe[0].t == 0.0);
  CHECK(report.probe[0].computed == expected);
  CHECK(report.probe[0].has_oracle);

  // The zero problem keeps every state identically zero, so all probe rows
  // and the sampled error vanish exactly.
  RunConfig zero = cfg;
  zero.problem = ProblemKind::zero;
  RunReport zrep = execute(zero);
  for (const ProbeRow& row : zrep.probe) {
    CHECK(row.computed == 0.0);
    CHECK(row.abs_error == 0.0);
  }
  CHECK(zrep.errors[0].oracle == "zero-function");
  CHECK(zrep.errors[0].value == 0.0);
}

TEST_CASE("multigrid in time agrees with sequential stepping on one config") {
  RunConfig cfg = tiny_heat();
  cfg.L = 5;
  cfg.S = 5;
  cfg.steps = 32;
  cfg.mgrit_tolerance = 1e-9;

  RunConfig loc = cfg;
  loc.algorithm = Algorithm::ctmgrit_loc;
  loc.temporal_tasks = 2;

  RunReport sequential = execute(cfg);
  RunReport multigrid = execute(loc);
  CHECK(max_state_difference(sequential, multigrid) <= 1e-6);
  CHECK(multigrid.stats.mgrit_solves == 2 * multigrid.subproblems);
  CHECK(!multigrid.stats.window_cycles.empty());
}

TEST_CASE("full grid runs share the output schema and oracle") {
  RunConfig cfg = tiny_heat();
  cfg.algorithm = Algorithm::full_grid_sequential;
  cfg.L = 5;
  cfg.S = 5;
  cfg.steps = 16;
  cfg.segments = 2;

  fs::path dir = "harness_out/full_grid";
  RunReport report = run_experiment(cfg, dir.string());
  CHECK(report.subproblems == 1);
  CHECK(report.errors[0].oracle == "manufactured");
  CHECK(report.errors[0].value < 5e-3);
  CHECK(report.probe.size() == 3);
  CHECK(report.probe[1].has_oracle);
  CHECK(read_file(dir / "probe.csv").rfind("t,computed,analytical,abs_error\r\n", 0) == 0);

  RunConfig mg = cfg;
  mg.algorithm = Algorithm::full_grid_mgrit;
  mg.mgrit_tolerance = 1e-10;
  RunReport multigrid = execute(mg);
  CHECK(max_state_difference(report, multigrid) <= 1e-7);
}

TEST_CASE("reruns are byte identical outside the metadata block") {
  RunConfig cfg = tiny_heat();
  fs::path dir1 = "harness_out/rerun_a";
  fs::path dir2 = "harness_out/rerun_b";
  run_experiment(cfg, dir1.string());
  run_experiment(cfg, dir2.string());

  CHECK(read_file(dir1 / "errors.csv") == read_file(dir2 / "errors.csv"));
  CHECK(read_file(dir1 / "probe.csv") == read_file(dir2 / "probe.csv"));
  CHECK(read_file(dir1 / "diagnostics.csv") == read_file(dir2 / "diagnostics.csv"));

  auto a = nlohmann::json::parse(read_file(dir1 / "summary.json"));
  auto b = nlohmann::json::parse(read_file(dir2 / "summary.json"));
  a.erase("metadata");
  b.erase("metadata");
  CHECK(a.dump() == b.dump());
}

TEST_CASE("the parallel degree changes wall times only") {
  RunConfig cfg = tiny_heat();
  cfg.algorithm = Algorithm::ctmgrit_loc;
  cfg.steps = 16;
  cfg.mgrit_tolerance = 1e-9;

  RunConfig wide = cfg;
  wide.parallel_degree = 4;
  cfg.parallel_degree = 1;

  fs::path dir1 = "harness_out/degree_1";
  fs::path dir4 = "harness_out/degree_4";
  RunReport serial = run_experiment(cfg, dir1.string());
  RunReport parallel = run_experiment(wide, dir4.string());

  REQUIRE(serial.final_states.size() == parallel.final_states.size());
  for (std::size_t i = 0; i < serial.final_states.size(); ++i)
    CHECK(serial.final_states[i] == parallel.final_states[i]);
  CHECK(read_file(dir1 / "errors.csv") == read_file(dir4 / "errors.csv"));
  CHECK(read_file(dir1 / "probe.csv") == read_file(dir4 / "probe.csv"));
  CHECK(read_file(dir1 / "diagnostics.csv") == read_file(dir4 / "diagnostics.csv"));
  CHECK(parallel_degree() == 1);  // execute restores the process-wide setting
}

TEST_CASE("the zero problem studies at round off") {
  RunConfig cfg;
  cfg.problem = ProblemKind::zero;
  cfg.L = 4;
  cfg.S = 4;
  cfg.steps = 8;
  cfg.steps_hat = 0;

  StudyReport study = run_study(cfg, 4, 6, false, "harness_out/zero_study");
  REQUIRE(study.rows.size() == 3);
  for (const StudyRow& row : study.rows) CHECK(row.error <= 1e-13);
  CHECK(study.oracle == "zero-function");
  CHECK(fs::exists(fs::path("harness_out/zero_study") / "study.csv"));
  CHECK(fs::exists(fs::path("harness_out/zero_study") / "study.json"));
}

TEST_CASE("a coarse heat study recovers the expected order") {
  RunConfig cfg = tiny_heat();
  cfg.probe_point.clear();
  cfg.segments = 1;
  cfg.steps = 16;
  cfg.t_end = 0.25;
  cfg.S = 5;

  StudyReport study = run_study(cfg, 4, 6, true, "");
  REQUIRE(study.rows.size() == 3);
  CHECK(study.rows[0].steps == 16);
  CHECK(study.rows[1].steps == 64);
  CHECK(study.rows[2].steps == 256);
  CHECK(study.rows[2].error < study.rows[0].error);
  CHECK(study.observed_order >= 1.6);
  CHECK(study.observed_order <= 2.8);
  CHECK(study.oracle == "manufactured");
}

TEST_CASE("the command line covers run, probe, study, validation and exit codes") {
  fs::path dir = "harness_out/cli";
  fs::create_directories(dir);
  fs::path good = dir / "good.json";
  write_text(good, R"({
    "problem": {"kind": "heat", "d": 2, "t_end": 0.25},
    "space": {"L": 4, "L0": 1, "S": 4},
    "time": {"steps": 8, "segments": 2},
    "probe": {"point": [0.5, 0.5]}
  })");

  CHECK(cli_main({"validate-config", "--config", good.string()}) == 0);
  CHECK(cli_main({"run", "--config", good.string(), "--out", (dir / "out").string()}) == 0);
  CHECK(fs::exists(dir / "out" / "summary.json"));
  CHECK(cli_main({"probe", "--config", good.string(), "--point", "0.25,0.25", "--out",
                  (dir / "probe_out").string()}) == 0);
  CHECK(fs::exists(dir / "probe_out" / "probe.csv"));

  // usage and config problems exit with 2
  CHECK(cli_main({"run", "--config", (dir / "missing.json").string()}) == 2);
  fs::path bad = dir / "bad.json";
  write_text(bad, R"({"space": {"L": 3, "L0": 9}})");
  CHECK(cli_main({"run", "--config", bad.string()}) == 2);
  CHECK(cli_main({"run", "--no-such-flag"}) == 2);
  CHECK(cli_main({}) == 2);
  CHECK(cli_main({"study", "--config", good.string(), "--l-min", "4", "--l-max", "5"}) == 2);
  fs::path no_probe = dir / "no_probe.json";
  write_text(no_probe, R"({"space": {"L": 4, "S": 4}, "time": {"steps": 8}})");
  CHECK(cli_main({"probe", "--config", no_probe.string()}) == 2);

  // a solver that cannot reach its tolerance exits with 1
  fs::path stuck = dir / "stuck.json";
  write_text(stuck, R"({
    "problem": {"kind": "heat", "d": 2, "t_end": 0.25},
    "space": {"L": 4, "L0": 1, "S": 4},
    "time": {"steps": 8, "segments": 1},
    "mgrit": {"tolerance": 1e-300, "max_iterations": 1},
    "run": {"algorithm": "ctmgrit_loc"}
  })");
  CHECK(cli_main({"run", "--config", stuck.string(), "--out", (dir / "stuck_out").string()}) == 1);

  // a successful study writes its table
  CHECK(cli_main({"study", "--config", good.string(), "--l-min", "4", "--l-max", "6",
                  "--hold-steps", "--out", (dir / "study_out").string()}) == 0);
  CHECK(fs::exists(dir / "study_out" / "study.csv"));
}

TEST_CASE("the environment variable supplies the default output directory") {
  RunConfig cfg = tiny_heat();
  CHECK(default_output_dir(cfg) == ".");

  fs::path dir = fs::absolute("harness_out/env_dir");
  setenv("CTMGRIT_OUT_DIR", dir.string().c_str(), 1);
  CHECK(default_output_dir(cfg) == dir.string());
  run_experiment(cfg);
  CHECK(fs::exists(dir / "summary.json"));
  unsetenv("CTMGRIT_OUT_DIR");
  CHECK(default_output_dir(cfg) == ".");

  cfg.output_dir = "explicit";
  setenv("CTMGRIT_OUT_DIR", "ignored", 1);
  CHECK(default_output_dir(cfg) == "explicit");
  unsetenv("CTMGRIT_OUT_DIR");
}
