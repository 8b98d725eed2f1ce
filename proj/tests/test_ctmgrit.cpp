#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ctmg/ctmgrit.hpp"
#include "ctmg/parallel.hpp"
#include "ctmg/problems.hpp"

#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

using namespace ctmg;

namespace {

ParabolicProblem heat_problem() {
  ParabolicProblem p;
  p.assemble = [](const AnisoGrid& g) { return assemble_heat_operator(g); };
  p.forcing = heat_forcing;
  p.solver.tolerance = 1e-12;  // keep Krylov noise far below every comparison here
  return p;
}

Real heat_initial(const std::vector<Real>& x) { return heat_exact_solution(x, 0.0); }

// Deterministic sample points strictly inside the unit box.
std::vector<std::vector<Real>> sample_points(int d, int count) {
  std::vector<std::vector<Real>> pts;
  std::uint64_t state = 42;
  auto next = [&state]() {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return 0.05 + 0.9 * static_cast<Real>(state >> 11) / static_cast<Real>(1ULL << 53);
  };
  for (int i = 0; i < count; ++i) {
    std::vector<Real> x(d);
    for (int j = 0; j < d; ++j) x[j] = next();
    pts.push_back(std::move(x));
  }
  return pts;
}

Real combined_error(const CombinationScheme& scheme, const BlockVector& states, Real t,
                    const std::vector<std::vector<Real>>& pts) {
  Real worst = 0.0;
  for (const auto& x : pts)
    worst = std::max(worst,
                     std::abs(evaluate_combined(scheme, states, x) - heat_exact_solution(x, t)));
  return worst;
}

Real max_state_diff(const BlockVector& a, const BlockVector& b) {
  REQUIRE(a.size() == b.size());
  Real worst = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l)
    worst = std::max(worst, (a[l] - b[l]).lpNorm<Eigen::Infinity>());
  return worst;
}

Vector pointwise_initial(const AnisoGrid& grid) {
  Vector u0(grid.size());
  for (Index i = 0; i < grid.size(); ++i) u0[i] = heat_initial(grid.node_coordinate(i));
  return u0;
}

}  // namespace

TEST_CASE("schedules anchor recombination times on every partition") {
  auto taus = uniform_times(0.0, 1.0, 2);
  REQUIRE(taus.size() == 3);
  CHECK(taus[1] == doctest::Approx(0.5));

  std::vector<TimePartition> parts{TimePartition::uniform(0.0, 1.0, 16, 2),
                                   TimePartition::uniform(0.0, 1.0, 32, 2)};
  auto sched = make_schedule(taus, parts);
  CHECK(sched.segments() == 2);
  CHECK(sched.anchors[0] == std::vector<Index>{0, 8, 16});
  CHECK(sched.anchors[1] == std::vector<Index>{0, 16, 32});

  // off-grid time, non-spanning range, non-increasing times
  CHECK_THROWS_AS(make_schedule({0.0, 0.3, 1.0}, parts), std::invalid_argument);
  CHECK_THROWS_AS(make_schedule({0.0, 0.5}, parts), std::invalid_argument);
  CHECK_THROWS_AS(make_schedule({0.0, 0.5, 0.5, 1.0}, parts), std::invalid_argument);
}

TEST_CASE("resource plans match the published task totals") {
  const Box box = Box::unit(2);

  auto plan14 = plan_resources(CombinationScheme::build(2, 14, 6, box), 10, 10);
  CHECK(plan14.scheme.count() == 7);
  CHECK(plan14.loc_task_count() == 1760);  // 10 * (4*32 + 3*16)
  CHECK(plan14.sg_task_count() == 1760);   // uniform budget: both accountings agree
  std::multiset<Index> spatial(plan14.spatial_tasks.begin(), plan14.spatial_tasks.end());
  CHECK(spatial == std::multiset<Index>{16, 16, 16, 32, 32, 32, 32});

  auto plan13 = plan_resources(CombinationScheme::build(2, 13, 6, box), 10, 100);
  CHECK(plan13.scheme.count() == 5);
  std::multiset<Index> products;
  for (int l = 0; l < plan13.scheme.count(); ++l)
    products.insert(plan13.temporal_tasks[l] * plan13.spatial_tasks[l]);
  CHECK(products == std::multiset<Index>{800, 800, 1600, 1600, 1600});
  CHECK(plan13.loc_task_count() == 6400);

  // one subproblem with a unit temporal budget: the spatial count is the total
  auto single = plan_resources(CombinationScheme::single_grid({5, 5}, box), 5, 1);
  CHECK(single.loc_task_count() == single.spatial_tasks[0]);
  CHECK(single.spatial_tasks[0] == 31);  // ceil(961 / 32)

  auto uneven = plan14;
  uneven.temporal_tasks[0] = 7;
  CHECK_THROWS_AS(uneven.sg_task_count(), std::logic_error);
}

TEST_CASE("single subproblem plan reduces to plain time stepping") {
  auto scheme = CombinationScheme::build(1, 4, 1, Box::unit(1));
  REQUIRE(scheme.count() == 1);
  auto plan = plan_resources(scheme, 4, 1, 0.0, 0.5, 8, 1, 2);
  auto driver = solve_sequential_ct(plan, heat_problem(), heat_initial);
  CHECK(driver.stats.spatial.solves == 8);
  CHECK(driver.stats.mgrit_solves == 0);

  std::vector<SpatialOperator> ops;
  ops.push_back(assemble_heat_operator(scheme.grid(0)));
  SpatialSolverOptions o;
  o.tolerance = 1e-12;
  o.subdomain_exponent = 4;
  BackwardEulerPropagator prop(std::move(ops), plan.partitions[0], heat_forcing, o);
  auto traj = sequential_solve(prop, BlockVector{pointwise_initial(scheme.grid(0))});
  // the driver's combine on a one-grid scheme is a hierarchization round trip
  CHECK(max_state_diff(driver.states, traj.back()) <= 1e-12);
}

TEST_CASE("combined solution beats each subproblem alone") {
  auto scheme = CombinationScheme::build(2, 5, 1, Box::unit(2));
  const Real T = 0.25;
  auto plan = plan_resources(scheme, 5, 1, 0.0, T, 16, 1, 2);
  auto pts = sample_points(2, 200);

  auto driver = solve_sequential_ct(plan, heat_problem(), heat_initial);
  const Real combined = combined_error(scheme, driver.states, T, pts);

  Real best_single = 1e30;
  for (int l = 0; l < scheme.count(); ++l) {
    const AnisoGrid& grid = scheme.grid(l);
    std::vector<SpatialOperator> ops;
    ops.push_back(assemble_heat_operator(grid));
    SpatialSolverOptions o;
    o.tolerance = 1e-12;
    o.subdomain_exponent = 5;
    BackwardEulerPropagator prop(std::move(ops), plan.partitions[l], heat_forcing, o);
    auto traj = sequential_solve(prop, BlockVector{pointwise_initial(grid)});
    Real err = 0.0;
    for (const auto& x : pts)
      err = std::max(err, std::abs(interpolate_on_grid(grid, traj.back()[0], x) -
                                   heat_exact_solution(x, T)));
    best_single = std::min(best_single, err);
  }
  CHECK(combined < best_single);
}

TEST_CASE("recombining more often stays within discretization error") {
  auto pts = sample_points(2, 100);
  const Real T = 0.25;

  auto run = [&](int L, Index steps, int segments) {
    auto scheme = CombinationScheme::build(2, L, 1, Box::unit(2));
    auto plan = plan_resources(scheme, 5, 1, 0.0, T, steps, segments, 2);
    auto r = solve_sequential_ct(plan, heat_problem(), heat_initial);
    return combined_error(plan.scheme, r.states, T, pts);
  };

  const Real e5_s1 = run(5, 16, 1);
  const Real e5_s2 = run(5, 16, 2);
  const Real e6_s1 = run(6, 64, 1);
  const Real e6_s2 = run(6, 64, 2);

  // both segment counts converge under simultaneous space-time refinement
  CHECK(e6_s1 < e5_s1);
  CHECK(e6_s2 < e5_s2);
  // the recombination count shifts the result only within the discretization error
  CHECK(e5_s2 <= 2.0 * e5_s1);
  CHECK(e5_s1 <= 2.0 * e5_s2);
}

TEST_CASE("multigrid windows reproduce the sequential composite") {
  auto scheme = CombinationScheme::build(2, 5, 1, Box::unit(2));
  auto plan = plan_resources(scheme, 5, 4, 0.0, 0.5, 16, 2, 2);
  auto seq = solve_sequential_ct(plan, heat_problem(), heat_initial);
  auto loc = solve_ctmgrit_loc(plan, heat_problem(), heat_initial);
  CHECK(max_state_diff(seq.states, loc.states) <= 1e-6);
  CHECK(loc.stats.mgrit_solves == 2 * scheme.count());
  CHECK(loc.stats.mgrit_cycles >= loc.stats.mgrit_solves);  // nothing converges for free
}

TEST_CASE("subproblems may carry different step counts") {
  auto scheme = CombinationScheme::build(2, 4, 1, Box::unit(2));
  auto plan = plan_resources(scheme, 5, 1, 0.0, 0.5, 16, 2, 2);
  for (int l = 0; l < scheme.count(); l += 2)
    plan.partitions[l] = TimePartition::uniform(0.0, 0.5, 32, 2);
  plan.schedule = make_schedule(plan.schedule.taus, plan.partitions);
  validate_plan(plan);

  auto seq = solve_sequential_ct(plan, heat_problem(), heat_initial);
  auto loc = solve_ctmgrit_loc(plan, heat_problem(), heat_initial);
  CHECK(max_state_diff(seq.states, loc.states) <= 1e-6);
}

TEST_CASE("block system iterates coincide with lockstep local iterates") {
  auto scheme = CombinationScheme::build(2, 4, 1, Box::unit(2));
  auto plan = plan_resources(scheme, 5, 1, 0.0, 0.5, 16, 1, 2);

  // iterates[cycle][subproblem] = all C-point values after that cycle
  std::map<int, std::map<int, std::vector<Vector>>> loc_iter, sg_iter;

  DriverOptions lo;
  lo.global_stopping = true;
  lo.observer = [&](int, int l, int cycle, const MgritSolver& s) {
    auto& slot = loc_iter[cycle][l];
    for (Index m = 0; m <= s.coarse_points(); ++m) slot.push_back(s.c_value(m)[0]);
  };
  auto loc = solve_ctmgrit_loc(plan, heat_problem(), heat_initial, lo);

  DriverOptions so;
  so.observer = [&](int, int, int cycle, const MgritSolver& s) {
    for (int l = 0; l < static_cast<int>(s.c_value(0).size()); ++l) {
      auto& slot = sg_iter[cycle][l];
      for (Index m = 0; m <= s.coarse_points(); ++m) slot.push_back(s.c_value(m)[l]);
    }
  };
  auto sg = solve_ctmgrit_sg(plan, heat_problem(), heat_initial, so);

  REQUIRE(!loc_iter.empty());
  REQUIRE(loc_iter.size() == sg_iter.size());
  for (const auto& [cycle, per_l] : loc_iter) {
    const auto& sg_l = sg_iter.at(cycle);
    REQUIRE(per_l.size() == sg_l.size());
    for (const auto& [l, vals] : per_l) {
      const auto& svals = sg_l.at(l);
      REQUIRE(vals.size() == svals.size());
      for (std::size_t i = 0; i < vals.size(); ++i)
        CHECK((vals[i] - svals[i]).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
  }
  CHECK(max_state_diff(loc.states, sg.states) <= 1e-12);
  CHECK(loc.stats.mgrit_cycles == sg.stats.mgrit_cycles * scheme.count());
}

TEST_CASE("block solve with recombination converges to the sequential composite") {
  auto scheme = CombinationScheme::build(2, 4, 1, Box::unit(2));
  auto plan = plan_resources(scheme, 5, 1, 0.0, 0.5, 16, 4, 2);
  auto seq = solve_sequential_ct(plan, heat_problem(), heat_initial);
  auto sg = solve_ctmgrit_sg(plan, heat_problem(), heat_initial);
  CHECK(max_state_diff(seq.states, sg.states) <= 1e-6);
  CHECK(sg.stats.mgrit_solves == 1);
}

TEST_CASE("single grid scheme equals a plain multigrid solve") {
  auto scheme = CombinationScheme::single_grid({4, 4}, Box::unit(2));
  auto plan = plan_resources(scheme, 5, 1, 0.0, 0.5, 16, 1, 2);
  auto sg = solve_ctmgrit_sg(plan, heat_problem(), heat_initial);

  std::vector<SpatialOperator> fine_ops, coarse_ops;
  fine_ops.push_back(assemble_heat_operator(scheme.grid(0)));
  coarse_ops = fine_ops;
  SpatialSolverOptions o;
  o.tolerance = 1e-12;
  o.subdomain_exponent = 5;
  BackwardEulerPropagator fine(std::move(fine_ops), plan.partitions[0], heat_forcing, o);
  BackwardEulerPropagator coarse(std::move(coarse_ops), plan.partitions[0].coarsened(),
                                 heat_forcing, o);
  MgritSolver solver(fine, coarse, plan.partitions[0],
                     BlockVector{pointwise_initial(scheme.grid(0))}, {});
  auto report = solver.solve();
  REQUIRE(report.converged);
  CHECK(sg.stats.mgrit_cycles == report.iterations);
  CHECK((sg.states[0] - solver.c_value(solver.coarse_points())[0]).lpNorm<Eigen::Infinity>() <=
        1e-11);
}

TEST_CASE("plans reject structural mistakes") {
  auto scheme = CombinationScheme::build(2, 4, 1, Box::unit(2));
  CHECK_THROWS_AS(plan_resources(scheme, 5, 1, 0.0, 1.0, 15, 2, 1), std::invalid_argument);

  // sequential stepping is fine without a C/F classification, multigrid is not
  auto unclassified = plan_resources(scheme, 5, 1, 0.0, 0.5, 16, 2, 1);
  CHECK_NOTHROW(solve_sequential_ct(unclassified, heat_problem(), heat_initial));
  CHECK_THROWS_AS(solve_ctmgrit_loc(unclassified, heat_problem(), heat_initial),
                  std::invalid_argument);

  // stale schedule after swapping a partition
  auto stale = plan_resources(scheme, 5, 1, 0.0, 0.5, 16, 2, 2);
  stale.partitions[1] = TimePartition::uniform(0.0, 0.5, 32, 2);
  CHECK_THROWS_AS(solve_sequential_ct(stale, heat_problem(), heat_initial),
                  std::invalid_argument);

  // the block variant needs one shared partition
  auto mixed = plan_resources(scheme, 5, 1, 0.0, 0.5, 16, 2, 2);
  mixed.partitions[0] = TimePartition::uniform(0.0, 0.5, 32, 2);
  mixed.schedule = make_schedule(mixed.schedule.taus, mixed.partitions);
  CHECK_THROWS_AS(solve_ctmgrit_sg(mixed, heat_problem(), heat_initial),
                  std::invalid_argument);

  // windows of three steps put the anchors between C points
  auto off_c = plan_resources(scheme, 5, 1, 0.0, 0.5, 6, 2, 2);
  CHECK_THROWS_AS(solve_ctmgrit_loc(off_c, heat_problem(), heat_initial),
                  std::invalid_argument);

  // an unreachable tolerance must surface as a failure, not a silent result
  DriverOptions strict;
  strict.mgrit.tolerance = 1e-301;
  strict.mgrit.max_iterations = 2;
  auto plan = plan_resources(scheme, 5, 1, 0.0, 0.5, 16, 1, 2);
  CHECK_THROWS_AS(solve_ctmgrit_loc(plan, heat_problem(), heat_initial, strict),
                  std::runtime_error);
}

TEST_CASE("identical plans give bit-identical results at any parallel degree") {
  auto scheme = CombinationScheme::build(2, 4, 1, Box::unit(2));
  auto plan = plan_resources(scheme, 4, 2, 0.0, 0.5, 16, 2, 2);

  set_parallel_degree(1);
  auto a = solve_ctmgrit_loc(plan, heat_problem(), heat_initial);
  set_parallel_degree(4);
  auto b = solve_ctmgrit_loc(plan, heat_problem(), heat_initial);
  set_parallel_degree(1);

  REQUIRE(a.states.size() == b.states.size());
  for (std::size_t l = 0; l < a.states.size(); ++l)
    CHECK((a.states[l].array() == b.states[l].array()).all());
  CHECK(a.stats.mgrit_cycles == b.stats.mgrit_cycles);
}
