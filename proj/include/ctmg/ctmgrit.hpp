#pragma once

#include "ctmg/combination.hpp"
#include "ctmg/mgrit.hpp"
#include "ctmg/propagator.hpp"
#include "ctmg/time_grid.hpp"
#include "ctmg/types.hpp"

#include <functional>
#include <vector>

namespace ctmg {

/**
 * Recombination times tau_0 < ... < tau_s anchored to step indices of every
 * subproblem partition: anchors[l][k] is the step n with t_{l,n} = tau_k, so
 * anchors[l][0] = 0 and anchors[l][s] = N_l. Subproblems may run different
 * step counts as long as every tau_k lies on all of their partitions.
 */
struct RecombinationSchedule {
  std::vector<Real> taus;
  std::vector<std::vector<Index>> anchors;

  int segments() const { return static_cast<int>(taus.size()) - 1; }
};

// Locates every tau on every partition; throws when one is missing, when the
// taus are not strictly increasing, or when they do not span the partitions.
RecombinationSchedule make_schedule(const std::vector<Real>& taus,
                                    const std::vector<TimePartition>& partitions);

// tau_k = t_start + k (t_end - t_start) / segments.
std::vector<Real> uniform_times(Real t_start, Real t_end, int segments);

/**
 * One composite run: the combination scheme, a time partition and task budget
 * per subproblem, and the recombination schedule tying them together.
 *
 * temporal_tasks[l] and spatial_tasks[l] are the parallel task capacities of
 * subproblem l in time and space. The usable totals follow the closed forms
 *   local variant:  sum_l temporal_tasks[l] * spatial_tasks[l]
 *   block variant:  temporal_tasks * sum_l spatial_tasks[l]
 * where the block variant requires a uniform temporal budget.
 *
 * The solvers decompose every grid with subdomain_exponent; the value inside
 * ParabolicProblem::solver is ignored so that the task accounting and the
 * actual decomposition can never drift apart.
 */
struct RunPlan {
  CombinationScheme scheme;
  std::vector<TimePartition> partitions;
  RecombinationSchedule schedule;
  std::vector<Index> temporal_tasks;
  std::vector<Index> spatial_tasks;
  int subdomain_exponent = 10;

  Index loc_task_count() const;
  Index sg_task_count() const;  // throws unless the temporal budget is uniform
};

// Builds a uniform plan: one shared step count, equidistant recombination
// times, spatial task counts chosen by the target subdomain size 2^S.
// steps = 0 picks ten steps per segment.
RunPlan plan_resources(const CombinationScheme& scheme, int subdomain_exponent,
                       Index temporal_tasks, Real t_start = 0.0, Real t_end = 1.0,
                       Index steps = 0, int segments = 1, int coarsening = 2);

// Structural consistency of a plan (sizes, anchor ranges, task counts);
// throws std::invalid_argument. Solvers call this on entry.
void validate_plan(const RunPlan& plan);

// Spatial discretization of one parabolic problem, applicable to any scheme
// grid. An empty forcing means a homogeneous equation.
struct ParabolicProblem {
  std::function<SpatialOperator(const AnisoGrid&)> assemble;
  ForcingFn forcing;
  SpatialSolverOptions solver;
};

using InitialFn = std::function<Real(const std::vector<Real>&)>;

// Called after each multigrid-in-time cycle so tests and probes can record
// iterates. segment is 1-based; the block solve passes segment 0 and
// subproblem -1. With per-subproblem stopping the calls may be concurrent.
using CycleObserver =
    std::function<void(int segment, int subproblem, int cycle, const MgritSolver& solver)>;

// Receives the per-subproblem states at every recombination time tau_k,
// k = 0..s, already recombined. The block solver reports them after it
// converged; the other drivers report as the run passes each time.
using RecombineObserver = std::function<void(int k, Real tau, const BlockVector& states)>;

struct DriverOptions {
  MgritOptions mgrit;
  // Cycle all subproblems of a segment in lockstep and stop on the max
  // residual across them, instead of each subproblem stopping on its own data.
  bool global_stopping = false;
  CycleObserver observer;
  RecombineObserver on_recombined;
};

struct DriverStats {
  int mgrit_solves = 0;
  long long mgrit_cycles = 0;
  int peak_mgrit_cycles = 0;
  // cycles per multigrid solve: [segment-1][subproblem] for the local variant,
  // one single-entry row for the block variant, empty for sequential stepping
  std::vector<std::vector<int>> window_cycles;
  SolveStats spatial;
  // counts[i] = spatial solves that took exactly i Krylov iterations
  std::vector<long long> krylov_histogram;
};

struct DriverResult {
  // Per-subproblem values at t_end, after the final recombination.
  BlockVector states;
  DriverStats stats;
};

// Time-sequential combination method: project u0 onto every grid, combine,
// then per segment propagate each subproblem step by step and recombine.
// Only on_recombined applies from the options; there is no multigrid here.
DriverResult solve_sequential_ct(const RunPlan& plan, const ParabolicProblem& problem,
                                 const InitialFn& u0, const DriverOptions& options = {});

// Same recombination structure, but every inter-recombination propagation is
// a multigrid-in-time solve on that window and subproblems run as independent
// concurrent tasks. Requires anchors on C points. Throws std::runtime_error
// when a window fails to reach the multigrid tolerance.
DriverResult solve_ctmgrit_loc(const RunPlan& plan, const ParabolicProblem& problem,
                               const InitialFn& u0, const DriverOptions& options = {});

// One global multigrid-in-time solve over the block system of all
// subproblems; a step leaving an interior recombination time recombines its
// input, and the final state is recombined on return. All subproblems must
// share a single time partition. Starts from the combined initial state so
// that with one segment the iterates coincide with the lockstep local
// variant component by component.
DriverResult solve_ctmgrit_sg(const RunPlan& plan, const ParabolicProblem& problem,
                              const InitialFn& u0, const DriverOptions& options = {});

}  // namespace ctmg
