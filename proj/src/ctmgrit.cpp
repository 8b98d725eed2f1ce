#include "ctmg/ctmgrit.hpp"

#include "ctmg/parallel.hpp"
#include "ctmg/sfc_partition.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace ctmg {

namespace {

// Index of the partition time closest to t.
Index nearest_step(const TimePartition& p, Real t) {
  Index lo = 0, hi = p.steps();
  while (lo < hi) {
    const Index mid = (lo + hi) / 2;
    if (p.time(mid) < t)
      lo = mid + 1;
    else
      hi = mid;
  }
  if (lo > 0 && std::abs(p.time(lo - 1) - t) <= std::abs(p.time(lo) - t)) --lo;
  return lo;
}

}  // namespace

std::vector<Real> uniform_times(Real t_start, Real t_end, int segments) {
  if (segments < 1) throw std::invalid_argument("uniform_times: need at least one segment");
  if (!(t_end > t_start)) throw std::invalid_argument("uniform_times: empty time interval");
  std::vector<Real> taus(segments + 1);
  for (int k = 0; k <= segments; ++k)
    taus[k] = t_start + static_cast<Real>(k) * (t_end - t_start) / static_cast<Real>(segments);
  return taus;
}

RecombinationSchedule make_schedule(const std::vector<Real>& taus,
                                    const std::vector<TimePartition>& partitions) {
  if (taus.size() < 2) throw std::invalid_argument("make_schedule: need at least one segment");
  for (std::size_t k = 1; k < taus.size(); ++k)
    if (!(taus[k] > taus[k - 1]))
      throw std::invalid_argument("make_schedule: times must be strictly increasing");

  RecombinationSchedule schedule{taus, {}};
  schedule.anchors.reserve(partitions.size());
  for (std::size_t l = 0; l < partitions.size(); ++l) {
    const TimePartition& p = partitions[l];
    const Real scale = std::max(Real(1), std::abs(p.time(p.steps()) - p.time(0)));
    std::vector<Index> a(taus.size());
    for (std::size_t k = 0; k < taus.size(); ++k) {
      a[k] = nearest_step(p, taus[k]);
      if (std::abs(p.time(a[k]) - taus[k]) > 1e-9 * scale) {
        std::ostringstream msg;
        msg << "make_schedule: recombination time " << taus[k]
            << " is not a step of subproblem " << l;
        throw std::invalid_argument(msg.str());
      }
    }
    if (a.front() != 0 || a.back() != p.steps())
      throw std::invalid_argument("make_schedule: times must span the whole partition");
    schedule.anchors.push_back(std::move(a));
  }
  return schedule;
}

Index RunPlan::loc_task_count() const {
  Index total = 0;
  for (std::size_t l = 0; l < temporal_tasks.size(); ++l)
    total += temporal_tasks[l] * spatial_tasks[l];
  return total;
}

Index RunPlan::sg_task_count() const {
  if (temporal_tasks.empty()) return 0;
  for (Index t : temporal_tasks)
    if (t != temporal_tasks.front())
      throw std::logic_error("RunPlan: block task count needs a uniform temporal budget");
  Index spatial = 0;
  for (Index p : spatial_tasks) spatial += p;
  return temporal_tasks.front() * spatial;
}

RunPlan plan_resources(const CombinationScheme& scheme, int subdomain_exponent,
                       Index temporal_tasks, Real t_start, Real t_end, Index steps,
                       int segments, int coarsening) {
  if (temporal_tasks < 1)
    throw std::invalid_argument("plan_resources: temporal task count must be positive");
  if (segments < 1) throw std::invalid_argument("plan_resources: need at least one segment");
  if (steps == 0) steps = 10 * segments;
  if (steps % segments != 0)
    throw std::invalid_argument("plan_resources: steps must divide evenly into the segments");

  std::vector<TimePartition> partitions;
  std::vector<Index> temporal, spatial;
  for (int l = 0; l < scheme.count(); ++l) {
    partitions.push_back(TimePartition::uniform(t_start, t_end, steps, coarsening));
    temporal.push_back(temporal_tasks);
    spatial.push_back(choose_subdomain_count(scheme.grid(l).level(), subdomain_exponent).count);
  }
  RecombinationSchedule schedule =
      make_schedule(uniform_times(t_start, t_end, segments), partitions);
  return RunPlan{scheme,   std::move(partitions),  std::move(schedule),
                 temporal, std::move(spatial),     subdomain_exponent};
}

void validate_plan(const RunPlan& plan) {
  const std::size_t m = static_cast<std::size_t>(plan.scheme.count());
  if (m == 0) throw std::invalid_argument("RunPlan: empty combination scheme");
  if (plan.partitions.size() != m || plan.schedule.anchors.size() != m ||
      plan.temporal_tasks.size() != m || plan.spatial_tasks.size() != m)
    throw std::invalid_argument("RunPlan: per-subproblem sizes disagree with the scheme");
  if (plan.schedule.segments() < 1) throw std::invalid_argument("RunPlan: empty schedule");
  if (plan.subdomain_exponent < 0)
    throw std::invalid_argument("RunPlan: subdomain exponent must be nonnegative");
  for (std::size_t l = 0; l < m; ++l) {
    if (plan.temporal_tasks[l] < 1 || plan.spatial_tasks[l] < 1)
      throw std::invalid_argument("RunPlan: task counts must be positive");
    const std::vector<Index>& a = plan.schedule.anchors[l];
    if (a.size() != plan.schedule.taus.size())
      throw std::invalid_argument("RunPlan: anchor count disagrees with the schedule");
    if (a.front() != 0 || a.back() != plan.partitions[l].steps())
      throw std::invalid_argument("RunPlan: anchors must span the whole partition");
    for (std::size_t k = 1; k < a.size(); ++k)
      if (a[k] <= a[k - 1])
        throw std::invalid_argument("RunPlan: anchors must be strictly increasing");
  }
}

namespace {

// The multigrid paths additionally need every window endpoint on a C point.
void require_c_aligned(const RunPlan& plan) {
  for (std::size_t l = 0; l < plan.partitions.size(); ++l) {
    const int c = plan.partitions[l].coarsening();
    if (c < 2)
      throw std::invalid_argument(
          "ctmgrit: multigrid in time needs a C/F classification (coarsening >= 2)");
    for (Index a : plan.schedule.anchors[l])
      if (a % c != 0)
        throw std::invalid_argument("ctmgrit: recombination times must sit on C points");
  }
}

void require_shared_partition(const RunPlan& plan) {
  const TimePartition& first = plan.partitions.front();
  for (std::size_t l = 1; l < plan.partitions.size(); ++l) {
    const TimePartition& p = plan.partitions[l];
    bool same = p.steps() == first.steps() && p.coarsening() == first.coarsening();
    for (Index n = 0; same && n <= first.steps(); ++n) same = p.time(n) == first.time(n);
    if (!same || plan.schedule.anchors[l] != plan.schedule.anchors.front())
      throw std::invalid_argument(
          "solve_ctmgrit_sg: subproblems must share one global time partition");
  }
}

SpatialSolverOptions plan_solver_options(const RunPlan& plan, const ParabolicProblem& problem) {
  SpatialSolverOptions options = problem.solver;
  options.subdomain_exponent = plan.subdomain_exponent;
  return options;
}

std::vector<std::unique_ptr<BackwardEulerPropagator>> build_propagators(
    const RunPlan& plan, const ParabolicProblem& problem, bool coarse) {
  const std::size_t m = static_cast<std::size_t>(plan.scheme.count());
  const SpatialSolverOptions options = plan_solver_options(plan, problem);
  std::vector<std::unique_ptr<BackwardEulerPropagator>> props(m);
  parallel_for(m, [&](std::size_t l) {
    std::vector<SpatialOperator> ops;
    ops.push_back(problem.assemble(plan.scheme.grid(static_cast<int>(l))));
    const TimePartition partition =
        coarse ? plan.partitions[l].coarsened() : plan.partitions[l];
    props[l] = std::make_unique<BackwardEulerPropagator>(std::move(ops), partition,
                                                         problem.forcing, options);
  });
  return props;
}

void accumulate_spatial(DriverStats& stats, const BackwardEulerPropagator& prop) {
  const SolveStats s = prop.stats();
  stats.spatial.solves += s.solves;
  stats.spatial.total_iterations += s.total_iterations;
  stats.spatial.peak_iterations = std::max(stats.spatial.peak_iterations, s.peak_iterations);
  const std::vector<long long> counts = prop.iteration_histogram();
  if (stats.krylov_histogram.size() < counts.size()) stats.krylov_histogram.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) stats.krylov_histogram[i] += counts[i];
}

[[noreturn]] void throw_nonconvergence(int segment, int subproblem, Real residual) {
  std::ostringstream msg;
  msg << "ctmgrit: multigrid in time missed its tolerance (segment " << segment;
  if (subproblem >= 0) msg << ", subproblem " << subproblem;
  msg << ", residual " << residual << ")";
  throw std::runtime_error(msg.str());
}

// Mirrors MgritSolver::solve: residual before each cycle, stop at the
// tolerance, but report every cycle to the observer and throw on failure.
int drive_cycles(MgritSolver& solver, const DriverOptions& options, int segment,
                 int subproblem) {
  for (int it = 0;; ++it) {
    const Real res = solver.residual_norm();
    if (res <= options.mgrit.tolerance) return it;
    if (it == options.mgrit.max_iterations) throw_nonconvergence(segment, subproblem, res);
    solver.cycle();
    if (options.observer) options.observer(segment, subproblem, it + 1, solver);
  }
}

/**
 * Composes an inner propagator with the recombination operator: any step whose
 * index is marked recombines its input state first. Marking step n therefore
 * recombines the state at t_{n-1} exactly once, no matter how often relaxation
 * or F-point reconstruction replays that step.
 */
class RecombiningPropagator final : public TimePropagator {
 public:
  RecombiningPropagator(const TimePropagator& inner, const CombinationScheme& scheme,
                        const SharedNodeMap& map, std::vector<Index> marked)
      : inner_(&inner), scheme_(&scheme), map_(&map), marked_(std::move(marked)) {}

  int block_size() const override { return inner_->block_size(); }
  Index steps() const override { return inner_->steps(); }

  BlockVector step(Index n, const BlockVector& u_prev) const override {
    if (!marked(n)) return inner_->step(n, u_prev);
    BlockVector q = u_prev;
    recombine(*scheme_, *map_, q);
    return inner_->step(n, q);
  }

  BlockVector step_homogeneous(Index n, const BlockVector& u_prev) const override {
    if (!marked(n)) return inner_->step_homogeneous(n, u_prev);
    BlockVector q = u_prev;
    recombine(*scheme_, *map_, q);
    return inner_->step_homogeneous(n, q);
  }

 private:
  bool marked(Index n) const {
    return std::binary_search(marked_.begin(), marked_.end(), n);
  }

  const TimePropagator* inner_;
  const CombinationScheme* scheme_;
  const SharedNodeMap* map_;
  std::vector<Index> marked_;
};

}  // namespace

DriverResult solve_sequential_ct(const RunPlan& plan, const ParabolicProblem& problem,
                                 const InitialFn& u0, const DriverOptions& options) {
  validate_plan(plan);
  const std::size_t m = static_cast<std::size_t>(plan.scheme.count());
  auto props = build_propagators(plan, problem, false);
  SharedNodeMap map(plan.scheme);

  BlockVector states = project_pointwise(plan.scheme, u0);
  recombine(plan.scheme, map, states);
  if (options.on_recombined) options.on_recombined(0, plan.schedule.taus.front(), states);
  for (int k = 1; k <= plan.schedule.segments(); ++k) {
    parallel_for(m, [&](std::size_t l) {
      const std::vector<Index>& a = plan.schedule.anchors[l];
      BlockVector u{states[l]};
      for (Index n = a[k - 1] + 1; n <= a[k]; ++n) u = props[l]->step(n, u);
      states[l] = std::move(u[0]);
    });
    recombine(plan.scheme, map, states);
    if (options.on_recombined) options.on_recombined(k, plan.schedule.taus[k], states);
  }

  DriverResult result{std::move(states), {}};
  for (std::size_t l = 0; l < m; ++l) accumulate_spatial(result.stats, *props[l]);
  return result;
}

DriverResult solve_ctmgrit_loc(const RunPlan& plan, const ParabolicProblem& problem,
                               const InitialFn& u0, const DriverOptions& options) {
  validate_plan(plan);
  require_c_aligned(plan);
  const std::size_t m = static_cast<std::size_t>(plan.scheme.count());
  auto fine = build_propagators(plan, problem, false);
  auto coarse = build_propagators(plan, problem, true);
  SharedNodeMap map(plan.scheme);

  BlockVector states = project_pointwise(plan.scheme, u0);
  recombine(plan.scheme, map, states);
  if (options.on_recombined) options.on_recombined(0, plan.schedule.taus.front(), states);
  DriverStats stats;
  for (int k = 1; k <= plan.schedule.segments(); ++k) {
    std::vector<std::unique_ptr<MgritSolver>> solvers(m);
    parallel_for(m, [&](std::size_t l) {
      const std::vector<Index>& a = plan.schedule.anchors[l];
      solvers[l] = std::make_unique<MgritSolver>(*fine[l], *coarse[l], plan.partitions[l],
                                                 TimeWindow{a[k - 1], a[k]},
                                                 BlockVector{states[l]}, options.mgrit);
    });

    std::vector<int> cycles(m, 0);
    if (options.global_stopping) {
      std::vector<Real> res(m);
      for (int it = 0;; ++it) {
        parallel_for(m, [&](std::size_t l) { res[l] = solvers[l]->residual_norm(); });
        const Real rmax = *std::max_element(res.begin(), res.end());
        if (rmax <= options.mgrit.tolerance) {
          std::fill(cycles.begin(), cycles.end(), it);
          break;
        }
        if (it == options.mgrit.max_iterations) throw_nonconvergence(k, -1, rmax);
        parallel_for(m, [&](std::size_t l) { solvers[l]->cycle(); });
        if (options.observer)
          for (std::size_t l = 0; l < m; ++l)
            options.observer(k, static_cast<int>(l), it + 1, *solvers[l]);
      }
    } else {
      parallel_for(m, [&](std::size_t l) {
        cycles[l] = drive_cycles(*solvers[l], options, k, static_cast<int>(l));
      });
    }

    for (std::size_t l = 0; l < m; ++l) {
      states[l] = solvers[l]->c_value(solvers[l]->coarse_points())[0];
      stats.mgrit_solves += 1;
      stats.mgrit_cycles += cycles[l];
      stats.peak_mgrit_cycles = std::max(stats.peak_mgrit_cycles, cycles[l]);
    }
    stats.window_cycles.push_back(std::move(cycles));
    recombine(plan.scheme, map, states);
    if (options.on_recombined) options.on_recombined(k, plan.schedule.taus[k], states);
  }

  for (std::size_t l = 0; l < m; ++l) {
    accumulate_spatial(stats, *fine[l]);
    accumulate_spatial(stats, *coarse[l]);
  }
  return DriverResult{std::move(states), stats};
}

DriverResult solve_ctmgrit_sg(const RunPlan& plan, const ParabolicProblem& problem,
                              const InitialFn& u0, const DriverOptions& options) {
  validate_plan(plan);
  require_c_aligned(plan);
  require_shared_partition(plan);
  const int m = plan.scheme.count();
  const TimePartition& partition = plan.partitions.front();
  const SpatialSolverOptions solver_options = plan_solver_options(plan, problem);

  std::vector<SpatialOperator> ops;
  ops.reserve(m);
  for (int l = 0; l < m; ++l) ops.push_back(problem.assemble(plan.scheme.grid(l)));
  std::vector<SpatialOperator> coarse_ops = ops;
  BackwardEulerPropagator fine_inner(std::move(ops), partition, problem.forcing,
                                     solver_options);
  BackwardEulerPropagator coarse_inner(std::move(coarse_ops), partition.coarsened(),
                                       problem.forcing, solver_options);

  SharedNodeMap map(plan.scheme);
  // Steps leaving an interior recombination time recombine their input; the
  // initial and final recombinations happen outside the multigrid solve.
  std::vector<Index> fine_marks, coarse_marks;
  const std::vector<Index>& a = plan.schedule.anchors.front();
  const int c = partition.coarsening();
  for (std::size_t k = 1; k + 1 < a.size(); ++k) {
    fine_marks.push_back(a[k] + 1);
    coarse_marks.push_back(a[k] / c + 1);
  }
  RecombiningPropagator fine(fine_inner, plan.scheme, map, std::move(fine_marks));
  RecombiningPropagator coarse(coarse_inner, plan.scheme, map, std::move(coarse_marks));

  BlockVector states = project_pointwise(plan.scheme, u0);
  recombine(plan.scheme, map, states);
  MgritSolver solver(fine, coarse, partition, TimeWindow{0, partition.steps()},
                     std::move(states), options.mgrit);
  const int cycles = drive_cycles(solver, options, 0, -1);

  DriverStats stats;
  stats.mgrit_solves = 1;
  stats.mgrit_cycles = cycles;
  stats.peak_mgrit_cycles = cycles;
  stats.window_cycles.push_back({cycles});
  accumulate_spatial(stats, fine_inner);
  accumulate_spatial(stats, coarse_inner);

  if (options.on_recombined) {
    // Anchors are C points, so the converged states at every recombination
    // time are stored; interior ones still need their recombination applied.
    for (std::size_t k = 0; k < a.size(); ++k) {
      BlockVector at_tau = solver.c_value(a[k] / c);
      if (k > 0) recombine(plan.scheme, map, at_tau);
      options.on_recombined(static_cast<int>(k), plan.schedule.taus[k], at_tau);
    }
  }

  BlockVector finals = solver.c_value(solver.coarse_points());
  recombine(plan.scheme, map, finals);
  return DriverResult{std::move(finals), stats};
}

}  // namespace ctmg
