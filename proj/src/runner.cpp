#include "ctmg/runner.hpp"

#include "ctmg/parallel.hpp"
#include "ctmg/problems.hpp"

#include "json.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace ctmg {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Restores the process-wide worker budget even when the solve throws.
struct ParallelDegreeGuard {
  int previous;
  explicit ParallelDegreeGuard(int degree) : previous(parallel_degree()) {
    if (degree > 0) set_parallel_degree(degree);
  }
  ~ParallelDegreeGuard() { set_parallel_degree(previous); }
};

bool is_full_grid(Algorithm algorithm) {
  return algorithm == Algorithm::full_grid_sequential || algorithm == Algorithm::full_grid_mgrit;
}

struct ProblemSetup {
  ParabolicProblem problem;
  InitialFn initial;
  // Analytical solution when the problem has one, with the oracle name the
  // reports use; empty name means no oracle.
  std::function<Real(const std::vector<Real>&, Real)> oracle;
  std::string oracle_name;
};

ProblemSetup make_setup(const RunConfig& config) {
  ProblemSetup setup;
  SpatialSolverOptions& solver = setup.problem.solver;
  solver.subdomain_exponent = config.S;
  solver.gamma = config.gamma;
  solver.coarse_per_subdomain = config.q;
  solver.tolerance = config.spatial_tolerance;
  solver.max_iterations = config.spatial_max_iterations;

  switch (config.problem) {
    case ProblemKind::heat:
      setup.problem.assemble = assemble_heat_operator;
      setup.problem.forcing = heat_forcing;
      solver.symmetric = true;
      setup.initial = [](const std::vector<Real>& x) { return heat_exact_solution(x, 0.0); };
      setup.oracle = heat_exact_solution;
      setup.oracle_name = "manufactured";
      break;
    case ProblemKind::zero:
      setup.problem.assemble = assemble_heat_operator;
      solver.symmetric = true;
      setup.initial = [](const std::vector<Real>&) { return 0.0; };
      setup.oracle = [](const std::vector<Real>&, Real) { return 0.0; };
      setup.oracle_name = "zero-function";
      break;
    case ProblemKind::oscillator:
    case ProblemKind::coupled_oscillators: {
      LinearSdeProblem sde = config.problem == ProblemKind::oscillator ? damped_oscillator()
                                                                       : coupled_oscillators();
      setup.problem.assemble = [sde](const AnisoGrid& grid) {
        return assemble_fokker_planck_operator(grid, sde);
      };
      solver.symmetric = false;
      GaussianState start{sde.mean0, sde.cov0};
      setup.initial = [start](const std::vector<Real>& x) { return start.density(x); };
      setup.oracle = [sde](const std::vector<Real>& x, Real t) {
        return gaussian_solution(sde, t).density(x);
      };
      setup.oracle_name = "gaussian-analytical";
      break;
    }
    case ProblemKind::toggle_2d:
    case ProblemKind::toggle_3d: {
      CmeProblem cme =
          config.problem == ProblemKind::toggle_2d ? toggle_switch_2d() : toggle_switch_3d();
      setup.problem.assemble = [cme](const AnisoGrid& grid) {
        return assemble_cme_operator(grid, cme);
      };
      solver.symmetric = false;
      GaussianState start{cme.mean0, cme.cov0};
      setup.initial = [start](const std::vector<Real>& x) { return start.density(x); };
      break;
    }
  }

  if (config.variant == VariantChoice::automatic)
    solver.variant = solver.symmetric ? SchwarzVariant::balanced : SchwarzVariant::additive;
  else if (config.variant == VariantChoice::one_level)
    solver.variant = SchwarzVariant::one_level;
  else if (config.variant == VariantChoice::additive)
    solver.variant = SchwarzVariant::additive;
  else
    solver.variant = SchwarzVariant::balanced;

  return setup;
}

// Deterministic quasi-random interior points; the acceptance metrics are
// frozen against this exact sequence, so do not reorder the draws.
std::vector<std::vector<Real>> sample_points(const Box& box, int count, std::uint64_t seed) {
  std::uint64_t state = seed;
  auto next = [&state]() {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return static_cast<Real>(state >> 11) * 0x1.0p-53;
  };
  std::vector<std::vector<Real>> points(count);
  for (auto& x : points) {
    x.resize(box.dim());
    for (int j = 0; j < box.dim(); ++j)
      x[j] = box.lo[j] + (0.05 + 0.9 * next()) * (box.hi[j] - box.lo[j]);
  }
  return points;
}

// Coefficient-weighted midpoint-rule integral over the scheme grids. Exact
// boundary cells contribute nothing because the values there are zero.
Real combined_mass(const CombinationScheme& scheme, const BlockVector& states) {
  Real mass = 0.0;
  for (int i = 0; i < scheme.count(); ++i) {
    const AnisoGrid& grid = scheme.grid(i);
    Real cell = 1.0;
    for (int j = 0; j < grid.dim(); ++j) cell *= grid.mesh_width(j);
    mass += static_cast<Real>(scheme.coefficient(i)) * states[i].sum() * cell;
  }
  return mass;
}

void krylov_per_solve(const std::vector<long long>& histogram, long long& min_it,
                      long long& median_it, long long& max_it) {
  min_it = median_it = max_it = 0;
  long long total = 0;
  for (long long c : histogram) total += c;
  if (total == 0) return;
  long long first = -1, last = 0;
  for (std::size_t i = 0; i < histogram.size(); ++i)
    if (histogram[i] > 0) {
      if (first < 0) first = static_cast<long long>(i);
      last = static_cast<long long>(i);
    }
  min_it = first;
  max_it = last;
  long long half = (total + 1) / 2, seen = 0;
  for (std::size_t i = 0; i < histogram.size(); ++i) {
    seen += histogram[i];
    if (seen >= half) {
      median_it = static_cast<long long>(i);
      break;
    }
  }
}

std::string format_real(Real v) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

void write_file(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

json summary_json(const RunReport& report) {
  json j;
  j["schema"] = "ctmgrit-run-1";
  j["config"] = json::parse(config_json(report.config));

  json& r = j["results"];
  r["converged"] = true;
  r["subproblems"] = report.subproblems;
  r["tasks"]["local"] = report.local_tasks;
  r["tasks"]["block"] = report.block_tasks;

  r["mgrit"]["solves"] = report.stats.mgrit_solves;
  r["mgrit"]["cycles_total"] = report.stats.mgrit_cycles;
  r["mgrit"]["cycles_peak"] = report.stats.peak_mgrit_cycles;
  r["mgrit"]["window_cycles"] = report.stats.window_cycles;

  long long min_it = 0, median_it = 0, max_it = 0;
  krylov_per_solve(report.stats.krylov_histogram, min_it, median_it, max_it);
  r["krylov"]["solves"] = report.stats.spatial.solves;
  r["krylov"]["iterations_total"] = report.stats.spatial.total_iterations;
  r["krylov"]["per_solve"]["min"] = min_it;
  r["krylov"]["per_solve"]["median"] = median_it;
  r["krylov"]["per_solve"]["max"] = max_it;

  r["errors"] = json::array();
  for (const OracleErrorRow& row : report.errors)
    r["errors"].push_back({{"oracle", row.oracle}, {"metric", row.metric}, {"value", row.value}});

  if (report.has_mass) {
    r["mass"]["initial"] = report.mass_initial;
    r["mass"]["final"] = report.mass_final;
    Real scale = std::abs(report.mass_initial);
    r["mass"]["relative_change"] =
        scale > 0.0 ? std::abs(report.mass_final - report.mass_initial) / scale
                    : std::abs(report.mass_final);
  }
  if (!report.probe.empty()) {
    r["probe"]["point"] = report.config.probe_point;
    r["probe"]["oracle"] = report.probe_oracle;
    r["probe"]["rows"] = report.probe.size();
  }
  if (!report.ssa_histogram.empty()) {
    r["ssa"]["trajectories"] = report.config.ssa_trajectories;
    r["ssa"]["states"] = report.ssa_histogram.size();
  }

  j["metadata"]["timestamp_utc"] = utc_timestamp();
  j["metadata"]["wall_seconds"]["setup"] = report.setup_seconds;
  j["metadata"]["wall_seconds"]["solve"] = report.solve_seconds;
  j["metadata"]["wall_seconds"]["report"] = report.report_seconds;
  return j;
}

}  // namespace

std::string default_output_dir(const RunConfig& config) {
  if (!config.output_dir.empty()) return config.output_dir;
  const char* env = std::getenv("CTMGRIT_OUT_DIR");
  if (env != nullptr && env[0] != '\0') return env;
  return ".";
}

RunReport execute(const RunConfig& config) {
  validate_config(config);
  RunReport report;
  report.config = config;

  ParallelDegreeGuard degree(config.parallel_degree);
  auto setup_start = Clock::now();

  int dim = problem_dim(config);
  Box box = problem_box(config);
  CombinationScheme scheme =
      is_full_grid(config.algorithm)
          ? CombinationScheme::single_grid(LevelIndex(dim, config.L), box)
          : CombinationScheme::build(dim, config.L, config.L0, box);
  RunPlan plan = plan_resources(scheme, config.S, config.temporal_tasks, 0.0, config.t_end,
                                total_steps(config), config.segments, config.coarsening);
  report.subproblems = scheme.count();
  report.local_tasks = plan.loc_task_count();
  report.block_tasks = plan.sg_task_count();

  ProblemSetup setup = make_setup(config);

  DriverOptions options;
  options.mgrit.n_relax = config.n_relax;
  options.mgrit.tolerance = config.mgrit_tolerance;
  options.mgrit.max_iterations = config.mgrit_max_iterations;

  bool density = is_density_problem(config.problem);
  std::vector<std::pair<Real, Real>> probe_samples;
  Real mass0 = 0.0;
  options.on_recombined = [&](int k, Real tau, const BlockVector& states) {
    if (!config.probe_point.empty())
      probe_samples.emplace_back(tau, evaluate_combined(plan.scheme, states, config.probe_point));
    if (density && k == 0) mass0 = combined_mass(plan.scheme, states);
  };

  report.setup_seconds = seconds_since(setup_start);
  auto solve_start = Clock::now();

  DriverResult result;
  switch (config.algorithm) {
    case Algorithm::sequential_ct:
    case Algorithm::full_grid_sequential:
      result = solve_sequential_ct(plan, setup.problem, setup.initial, options);
      break;
    case Algorithm::ctmgrit_loc:
      result = solve_ctmgrit_loc(plan, setup.problem, setup.initial, options);
      break;
    case Algorithm::ctmgrit_sg:
    case Algorithm::full_grid_mgrit:
      result = solve_ctmgrit_sg(plan, setup.problem, setup.initial, options);
      break;
  }

  report.solve_seconds = seconds_since(solve_start);
  auto report_start = Clock::now();

  report.stats = result.stats;
  report.final_states = std::move(result.states);

  if (setup.oracle) {
    Real worst = 0.0;
    for (const auto& x : sample_points(box, 256, config.seed)) {
      Real computed = evaluate_combined(plan.scheme, report.final_states, x);
      worst = std::max(worst, std::abs(computed - setup.oracle(x, config.t_end)));
    }
    report.errors.push_back({setup.oracle_name, "max_abs_sampled", worst});
  }
  if (density) {
    report.has_mass = true;
    report.mass_initial = mass0;
    report.mass_final = combined_mass(plan.scheme, report.final_states);
    Real scale = std::abs(mass0);
    Real relative = scale > 0.0 ? std::abs(report.mass_final - mass0) / scale
                                : std::abs(report.mass_final);
    report.errors.push_back({"mass-conservation", "relative_change", relative});
  }

  report.probe_oracle = setup.oracle ? setup.oracle_name : "";
  for (const auto& [t, computed] : probe_samples) {
    ProbeRow row;
    row.t = t;
    row.computed = computed;
    if (setup.oracle) {
      row.has_oracle = true;
      row.analytical = setup.oracle(config.probe_point, t);
      row.abs_error = std::abs(computed - row.analytical);
    }
    report.probe.push_back(row);
  }

  if (config.ssa_trajectories > 0) {
    CmeProblem cme =
        config.problem == ProblemKind::toggle_2d ? toggle_switch_2d() : toggle_switch_3d();
    std::vector<int> x0(cme.dimension());
    for (int j = 0; j < cme.dimension(); ++j)
      x0[j] = static_cast<int>(std::llround(cme.mean0[j]));
    report.ssa_histogram = gillespie_ssa(cme, x0, config.t_end,
                                         static_cast<int>(config.ssa_trajectories), config.seed);
  }

  report.report_seconds = seconds_since(report_start);
  return report;
}

void write_artifacts(const RunReport& report, const std::string& dir) {
  fs::path out(dir.empty() ? "." : dir);
  fs::create_directories(out);

  write_file(out / "summary.json", summary_json(report).dump(2) + "\n");

  std::string errors = "oracle,metric,value\r\n";
  for (const OracleErrorRow& row : report.errors)
    errors += row.oracle + "," + row.metric + "," + format_real(row.value) + "\r\n";
  write_file(out / "errors.csv", errors);

  std::string probe = "t,computed,analytical,abs_error\r\n";
  for (const ProbeRow& row : report.probe) {
    probe += format_real(row.t) + "," + format_real(row.computed) + ",";
    if (row.has_oracle)
      probe += format_real(row.analytical) + "," + format_real(row.abs_error);
    else
      probe += ",";
    probe += "\r\n";
  }
  write_file(out / "probe.csv", probe);

  // segment 0 / subproblem -1 marks the block solve over all subproblems.
  std::string diagnostics = "segment,subproblem,mgrit_cycles\r\n";
  bool block = report.config.algorithm == Algorithm::ctmgrit_sg ||
               report.config.algorithm == Algorithm::full_grid_mgrit;
  for (std::size_t k = 0; k < report.stats.window_cycles.size(); ++k) {
    const auto& row = report.stats.window_cycles[k];
    for (std::size_t l = 0; l < row.size(); ++l) {
      if (block)
        diagnostics += "0,-1," + std::to_string(row[l]) + "\r\n";
      else
        diagnostics += std::to_string(k + 1) + "," + std::to_string(l) + "," +
                       std::to_string(row[l]) + "\r\n";
    }
  }
  write_file(out / "diagnostics.csv", diagnostics);

  if (!report.ssa_histogram.empty()) {
    int dim = problem_dim(report.config);
    std::string ssa;
    for (int j = 0; j < dim; ++j) ssa += "x" + std::to_string(j + 1) + ",";
    ssa += "probability\r\n";
    for (const auto& [state, probability] : report.ssa_histogram) {
      for (int v : state) ssa += std::to_string(v) + ",";
      ssa += format_real(probability) + "\r\n";
    }
    write_file(out / "ssa.csv", ssa);
  }
}

RunReport run_experiment(const RunConfig& config, const std::string& out_dir) {
  RunReport report = execute(config);
  write_artifacts(report, out_dir.empty() ? default_output_dir(config) : out_dir);
  return report;
}

Real max_state_difference(const RunReport& a, const RunReport& b) {
  if (a.final_states.size() != b.final_states.size())
    throw std::invalid_argument("max_state_difference: runs use different schemes");
  Real worst = 0.0;
  for (std::size_t i = 0; i < a.final_states.size(); ++i) {
    if (a.final_states[i].size() != b.final_states[i].size())
      throw std::invalid_argument("max_state_difference: runs use different schemes");
    if (a.final_states[i].size() > 0)
      worst = std::max(worst, (a.final_states[i] - b.final_states[i]).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

StudyReport run_study(const RunConfig& base, int l_min, int l_max, bool scale_steps,
                      const std::string& dir) {
  if (l_min < 1 || l_max - l_min + 1 < 3)
    throw std::invalid_argument("study requires at least three levels");
  if (base.problem != ProblemKind::heat && base.problem != ProblemKind::zero &&
      base.problem != ProblemKind::oscillator &&
      base.problem != ProblemKind::coupled_oscillators)
    throw std::invalid_argument("study requires a problem with an analytical solution");

  auto start = Clock::now();
  StudyReport study;
  Index base_steps = total_steps(base);
  for (int L = l_min; L <= l_max; ++L) {
    RunConfig config = base;
    config.L = L;
    config.steps = scale_steps ? base_steps << (2 * (L - l_min)) : base_steps;
    config.steps_hat = 0;
    validate_config(config);
    RunReport report = execute(config);
    Real error = 0.0;
    for (const OracleErrorRow& row : report.errors)
      if (row.metric == "max_abs_sampled") {
        error = row.value;
        study.oracle = row.oracle;
        break;
      }
    study.rows.push_back({L, config.steps, error});
  }

  // Least squares fit of log2(error) against L; errors below round-off are
  // clamped so the zero solution does not poison the logarithm.
  Real n = static_cast<Real>(study.rows.size());
  Real sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const StudyRow& row : study.rows) {
    Real x = static_cast<Real>(row.L);
    Real y = std::log2(std::max(row.error, Real(1e-300)));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  study.observed_order = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
  study.wall_seconds = seconds_since(start);

  if (!dir.empty()) {
    fs::path out(dir);
    fs::create_directories(out);
    std::string csv = "L,steps,error\r\n";
    for (const StudyRow& row : study.rows)
      csv += std::to_string(row.L) + "," + std::to_string(row.steps) + "," +
             format_real(row.error) + "\r\n";
    write_file(out / "study.csv", csv);

    json j;
    j["schema"] = "ctmgrit-study-1";
    j["config"] = json::parse(config_json(base));
    j["levels"] = json::array();
    for (const StudyRow& row : study.rows)
      j["levels"].push_back({{"L", row.L}, {"steps", row.steps}, {"error", row.error}});
    j["observed_order"] = study.observed_order;
    j["oracle"] = study.oracle;
    j["metadata"]["timestamp_utc"] = utc_timestamp();
    j["metadata"]["wall_seconds"] = study.wall_seconds;
    write_file(out / "study.json", j.dump(2) + "\n");
  }
  return study;
}

}  // namespace ctmg
