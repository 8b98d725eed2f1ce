#pragma once

#include "ctmg/grid.hpp"
#include "ctmg/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ctmg {

// "zero" is the heat operator with no forcing and u0 = 0; its exact solution
// vanishes identically, so any reported error is pure round-off.
enum class ProblemKind { heat, zero, oscillator, coupled_oscillators, toggle_2d, toggle_3d };

enum class Algorithm {
  sequential_ct,        // combination technique, sequential time stepping
  ctmgrit_loc,          // independent multigrid-in-time solve per subproblem
  ctmgrit_sg,           // one multigrid-in-time solve over the block system
  full_grid_sequential, // single grid at level L, sequential stepping
  full_grid_mgrit       // single grid at level L, multigrid in time
};

// automatic resolves to balanced for symmetric operators and additive otherwise.
enum class VariantChoice { automatic, one_level, additive, balanced };

/**
 * One fully specified experiment. parse_config fills every field, applying
 * defaults for omitted ones, and rejects anything inconsistent before any
 * work starts; the error message names the offending field.
 *
 * Exactly one of steps/steps_hat is nonzero. steps is the total step count,
 * steps_hat the per-task count with steps = steps_hat * 10 * segments.
 */
struct RunConfig {
  ProblemKind problem = ProblemKind::heat;
  int d = 2;        // spatial dimension; fixed by every problem except heat and zero
  Real t_end = 1.0;

  int L = 5;        // target sparse grid level
  int L0 = 1;       // minimal level per dimension
  int S = 10;       // target subdomain size 2^S nodes
  Real gamma = 0.5; // subdomain overlap factor
  int q = 0;        // coarse nodes per subdomain; 0 picks 2^(S-4) clamped
  VariantChoice variant = VariantChoice::automatic;
  Real spatial_tolerance = 1e-8;
  int spatial_max_iterations = 500;

  Index steps = 0;
  Index steps_hat = 0;
  int segments = 1; // recombinations happen at the segment boundaries

  int coarsening = 2;
  int n_relax = 1;
  Real mgrit_tolerance = 1e-8;
  int mgrit_max_iterations = 100;

  Algorithm algorithm = Algorithm::sequential_ct;
  Index temporal_tasks = 1;
  int parallel_degree = 0; // 0 keeps the process-wide setting
  std::uint64_t seed = 1;

  std::vector<Real> probe_point; // empty disables the probe time series
  Index ssa_trajectories = 0;    // reaction network problems only

  std::string output_dir; // empty defers to CTMGRIT_OUT_DIR, then "."
};

const char* to_string(ProblemKind kind);
const char* to_string(Algorithm algorithm);
const char* to_string(VariantChoice variant);

// Spatial dimension of the configured problem (fixed for all but heat/zero).
int problem_dim(const RunConfig& config);
// Computational domain of the configured problem.
Box problem_box(const RunConfig& config);
// Resolves steps vs steps_hat to the total number of time steps.
Index total_steps(const RunConfig& config);
// True when the problem evolves a probability density (mass bookkeeping applies).
bool is_density_problem(ProblemKind kind);

// Semantic validation of an assembled config; throws std::invalid_argument
// with a message naming the field. Call again after mutating a parsed config.
void validate_config(const RunConfig& config);

// JSON text -> validated config. Unknown keys, type mismatches and malformed
// JSON are rejected with std::invalid_argument.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

// Normalized JSON round trip of the effective configuration, defaults filled
// in and steps resolved to the total count. Deterministic key order.
std::string config_json(const RunConfig& config);

}  // namespace ctmg
