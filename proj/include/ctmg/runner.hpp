#pragma once

#include "ctmg/config.hpp"
#include "ctmg/ctmgrit.hpp"

#include <map>
#include <string>
#include <vector>

namespace ctmg {

struct OracleErrorRow {
  std::string oracle;  // what the computed solution was compared against
  std::string metric;
  Real value = 0.0;
};

struct ProbeRow {
  Real t = 0.0;
  Real computed = 0.0;
  bool has_oracle = false;
  Real analytical = 0.0;  // meaningful only when has_oracle
  Real abs_error = 0.0;
};

/**
 * Everything one experiment produced, decoupled from the file layout so that
 * tests can assert on results without touching the filesystem. Wall times
 * live in their own fields and end up in the metadata block of summary.json;
 * no other output may depend on them.
 */
struct RunReport {
  RunConfig config;
  int subproblems = 0;
  Index local_tasks = 0;  // sum_l temporal_tasks * spatial_tasks_l
  Index block_tasks = 0;  // temporal_tasks * sum_l spatial_tasks_l
  DriverStats stats;
  BlockVector final_states;
  std::vector<OracleErrorRow> errors;
  std::string probe_oracle;  // empty when no analytical solution is available
  std::vector<ProbeRow> probe;
  bool has_mass = false;  // density problems track the discrete integral
  Real mass_initial = 0.0;
  Real mass_final = 0.0;
  std::map<std::vector<int>, Real> ssa_histogram;
  double setup_seconds = 0.0;
  double solve_seconds = 0.0;
  double report_seconds = 0.0;
};

// Runs the configured experiment without writing anything. The process-wide
// parallel degree is switched to config.parallel_degree (when nonzero) for
// the duration of the call and restored afterwards.
RunReport execute(const RunConfig& config);

// Writes summary.json, errors.csv, probe.csv, diagnostics.csv and, when an
// SSA histogram is present, ssa.csv under dir. Every file is written to a
// temporary name first and renamed into place.
void write_artifacts(const RunReport& report, const std::string& dir);

// execute + write_artifacts; an empty out_dir picks default_output_dir.
RunReport run_experiment(const RunConfig& config, const std::string& out_dir = "");

// config.output_dir, then the CTMGRIT_OUT_DIR environment variable, then ".".
std::string default_output_dir(const RunConfig& config);

// Largest absolute componentwise difference between the final states of two
// runs on the same scheme; used to compare algorithms on one configuration.
Real max_state_difference(const RunReport& a, const RunReport& b);

struct StudyRow {
  int L = 0;
  Index steps = 0;
  Real error = 0.0;
};

struct StudyReport {
  std::vector<StudyRow> rows;
  Real observed_order = 0.0;  // -slope of the least squares fit of log2(error) vs L
  std::string oracle;
  double wall_seconds = 0.0;
};

/**
 * Reruns the base config for L = l_min..l_max (at least three levels) and
 * fits the convergence order of the sampled error against the analytical
 * oracle, which the problem must provide. scale_steps refines the step count
 * fourfold per level so the first order time error tracks the squared mesh
 * width; the base step count applies at l_min. Writes study.csv and
 * study.json unless dir is empty.
 */
StudyReport run_study(const RunConfig& base, int l_min, int l_max, bool scale_steps,
                      const std::string& dir);

}  // namespace ctmg
