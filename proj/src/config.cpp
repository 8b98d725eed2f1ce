#include "ctmg/config.hpp"

#include "ctmg/combination.hpp"
#include "ctmg/problems.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ctmg {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& message) { throw std::invalid_argument(message); }

void check_keys(const json& obj, const std::string& prefix,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known) fail("unknown key \"" + (prefix.empty() ? "" : prefix + ".") + item.key() + "\"");
  }
}

std::string qualify(const std::string& section, const char* key) { return section + "." + key; }

void get_int(const json& sec, const std::string& section, const char* key, int& out) {
  if (!sec.contains(key)) return;
  const json& v = sec.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned())
    fail(qualify(section, key) + " must be an integer");
  out = v.get<int>();
}

void get_index(const json& sec, const std::string& section, const char* key, Index& out) {
  if (!sec.contains(key)) return;
  const json& v = sec.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned())
    fail(qualify(section, key) + " must be an integer");
  out = v.get<Index>();
}

void get_u64(const json& sec, const std::string& section, const char* key, std::uint64_t& out) {
  if (!sec.contains(key)) return;
  const json& v = sec.at(key);
  if (v.is_number_unsigned())
    out = v.get<std::uint64_t>();
  else if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
    out = static_cast<std::uint64_t>(v.get<std::int64_t>());
  else
    fail(qualify(section, key) + " must be a nonnegative integer");
}

void get_real(const json& sec, const std::string& section, const char* key, Real& out) {
  if (!sec.contains(key)) return;
  const json& v = sec.at(key);
  if (!v.is_number()) fail(qualify(section, key) + " must be a number");
  out = v.get<Real>();
}

void get_string(const json& sec, const std::string& section, const char* key, std::string& out) {
  if (!sec.contains(key)) return;
  const json& v = sec.at(key);
  if (!v.is_string()) fail(qualify(section, key) + " must be a string");
  out = v.get<std::string>();
}

ProblemKind kind_from(const std::string& name) {
  if (name == "heat") return ProblemKind::heat;
  if (name == "zero") return ProblemKind::zero;
  if (name == "oscillator") return ProblemKind::oscillator;
  if (name == "coupled_oscillators") return ProblemKind::coupled_oscillators;
  if (name == "toggle_2d") return ProblemKind::toggle_2d;
  if (name == "toggle_3d") return ProblemKind::toggle_3d;
  fail("problem.kind must be one of "
       "heat|zero|oscillator|coupled_oscillators|toggle_2d|toggle_3d");
}

Algorithm algorithm_from(const std::string& name) {
  if (name == "sequential_ct") return Algorithm::sequential_ct;
  if (name == "ctmgrit_loc") return Algorithm::ctmgrit_loc;
  if (name == "ctmgrit_sg") return Algorithm::ctmgrit_sg;
  if (name == "full_grid_sequential") return Algorithm::full_grid_sequential;
  if (name == "full_grid_mgrit") return Algorithm::full_grid_mgrit;
  fail("run.algorithm must be one of "
       "sequential_ct|ctmgrit_loc|ctmgrit_sg|full_grid_sequential|full_grid_mgrit");
}

VariantChoice variant_from(const std::string& name) {
  if (name == "auto") return VariantChoice::automatic;
  if (name == "one_level") return VariantChoice::one_level;
  if (name == "additive") return VariantChoice::additive;
  if (name == "balanced") return VariantChoice::balanced;
  fail("space.variant must be one of auto|one_level|additive|balanced");
}

int fixed_dim(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::oscillator:
    case ProblemKind::toggle_2d:
      return 2;
    case ProblemKind::toggle_3d:
      return 3;
    case ProblemKind::coupled_oscillators:
      return 4;
    default:
      return 0;  // heat and zero take their dimension from the config
  }
}

bool uses_mgrit(Algorithm algorithm) {
  return algorithm == Algorithm::ctmgrit_loc || algorithm == Algorithm::ctmgrit_sg ||
         algorithm == Algorithm::full_grid_mgrit;
}

bool is_full_grid(Algorithm algorithm) {
  return algorithm == Algorithm::full_grid_sequential || algorithm == Algorithm::full_grid_mgrit;
}

}  // namespace

const char* to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::heat: return "heat";
    case ProblemKind::zero: return "zero";
    case ProblemKind::oscillator: return "oscillator";
    case ProblemKind::coupled_oscillators: return "coupled_oscillators";
    case ProblemKind::toggle_2d: return "toggle_2d";
    case ProblemKind::toggle_3d: return "toggle_3d";
  }
  return "?";
}

const char* to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::sequential_ct: return "sequential_ct";
    case Algorithm::ctmgrit_loc: return "ctmgrit_loc";
    case Algorithm::ctmgrit_sg: return "ctmgrit_sg";
    case Algorithm::full_grid_sequential: return "full_grid_sequential";
    case Algorithm::full_grid_mgrit: return "full_grid_mgrit";
  }
  return "?";
}

const char* to_string(VariantChoice variant) {
  switch (variant) {
    case VariantChoice::automatic: return "auto";
    case VariantChoice::one_level: return "one_level";
    case VariantChoice::additive: return "additive";
    case VariantChoice::balanced: return "balanced";
  }
  return "?";
}

int problem_dim(const RunConfig& config) {
  int fixed = fixed_dim(config.problem);
  return fixed > 0 ? fixed : config.d;
}

Box problem_box(const RunConfig& config) {
  switch (config.problem) {
    case ProblemKind::heat:
    case ProblemKind::zero:
      return Box::unit(config.d);
    case ProblemKind::oscillator:
      return damped_oscillator().box;
    case ProblemKind::coupled_oscillators:
      return coupled_oscillators().box;
    case ProblemKind::toggle_2d:
      return toggle_switch_2d().box;
    case ProblemKind::toggle_3d:
      return toggle_switch_3d().box;
  }
  throw std::logic_error("problem_box: unreachable");
}

Index total_steps(const RunConfig& config) {
  if (config.steps > 0) return config.steps;
  return config.steps_hat * 10 * config.segments;
}

bool is_density_problem(ProblemKind kind) {
  return kind == ProblemKind::oscillator || kind == ProblemKind::coupled_oscillators ||
         kind == ProblemKind::toggle_2d || kind == ProblemKind::toggle_3d;
}

void validate_config(const RunConfig& config) {
  int fixed = fixed_dim(config.problem);
  if (fixed > 0 && config.d != fixed)
    fail("problem.d is fixed to " + std::to_string(fixed) + " for " +
         to_string(config.problem));
  if (fixed == 0 && (config.d < 1 || config.d > 6)) fail("problem.d must lie in [1, 6]");
  if (!(config.t_end > 0.0)) fail("problem.t_end must be positive");

  if (config.L < 1 || config.L > 30) fail("space.L must lie in [1, 30]");
  if (config.L0 < 1) fail("space.L0 must be at least 1");
  if (config.L0 > config.L) fail("space.L0 must not exceed space.L");
  if (config.S < 0 || config.S > 30) fail("space.S must lie in [0, 30]");
  if (!(config.gamma > 0.0)) fail("space.gamma must be positive");
  if (config.q < 0) fail("space.q must be nonnegative");
  if (!(config.spatial_tolerance > 0.0)) fail("space.tolerance must be positive");
  if (config.spatial_max_iterations < 1) fail("space.max_iterations must be at least 1");

  if (config.steps < 0) fail("time.steps must be positive");
  if (config.steps_hat < 0) fail("time.steps_hat must be positive");
  if (config.steps == 0 && config.steps_hat == 0)
    fail("time.steps or time.steps_hat is required");
  if (config.steps > 0 && config.steps_hat > 0)
    fail("time.steps and time.steps_hat are mutually exclusive");
  if (config.segments < 1) fail("time.segments must be at least 1");
  Index total = total_steps(config);
  if (total % config.segments != 0) fail("time.steps must be divisible by time.segments");
  Index per_segment = total / config.segments;
  if (per_segment < 1) fail("time.steps must provide at least one step per segment");

  if (config.coarsening < 1) fail("mgrit.coarsening must be at least 1");
  if (uses_mgrit(config.algorithm)) {
    if (config.coarsening < 2)
      fail(std::string("mgrit.coarsening must be at least 2 for algorithm ") +
           to_string(config.algorithm));
    if (per_segment % config.coarsening != 0)
      fail("time steps per segment must be divisible by mgrit.coarsening");
  }
  if (config.n_relax < 0) fail("mgrit.n_relax must be nonnegative");
  if (!(config.mgrit_tolerance > 0.0)) fail("mgrit.tolerance must be positive");
  if (config.mgrit_max_iterations < 1) fail("mgrit.max_iterations must be at least 1");

  if (config.temporal_tasks < 1) fail("run.temporal_tasks must be at least 1");
  if (config.parallel_degree < 0) fail("run.parallel_degree must be nonnegative");

  int dim = problem_dim(config);
  Box box = problem_box(config);
  if (!config.probe_point.empty()) {
    if (static_cast<int>(config.probe_point.size()) != dim)
      fail("probe.point must have " + std::to_string(dim) + " coordinates");
    for (int j = 0; j < dim; ++j)
      if (config.probe_point[j] < box.lo[j] || config.probe_point[j] > box.hi[j])
        fail("probe.point must lie inside the problem domain");
  }

  if (config.ssa_trajectories < 0) fail("ssa.trajectories must be nonnegative");
  if (config.ssa_trajectories > 0 && config.problem != ProblemKind::toggle_2d &&
      config.problem != ProblemKind::toggle_3d)
    fail("ssa.trajectories requires a reaction network problem");

  if (!is_full_grid(config.algorithm)) {
    // d, L and L0 are individually valid at this point, so the only failure
    // mode left in the scheme builder is an empty enumeration.
    try {
      CombinationScheme::build(dim, config.L, config.L0, box);
    } catch (const std::invalid_argument&) {
      fail("space.L0 leaves the combination scheme empty");
    }
  }
}

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) fail("config root must be a JSON object");
  check_keys(root, "", {"problem", "space", "time", "mgrit", "run", "probe", "ssa", "output"});

  RunConfig cfg;

  if (root.contains("problem")) {
    const json& sec = root.at("problem");
    if (!sec.is_object()) fail("problem must be an object");
    check_keys(sec, "problem", {"kind", "d", "t_end"});
    std::string kind = to_string(cfg.problem);
    get_string(sec, "problem", "kind", kind);
    cfg.problem = kind_from(kind);
    int fixed = fixed_dim(cfg.problem);
    if (fixed > 0) cfg.d = fixed;
    get_int(sec, "problem", "d", cfg.d);
    get_real(sec, "problem", "t_end", cfg.t_end);
  }

  if (root.contains("space")) {
    const json& sec = root.at("space");
    if (!sec.is_object()) fail("space must be an object");
    check_keys(sec, "space",
               {"L", "L0", "S", "gamma", "q", "variant", "tolerance", "max_iterations"});
    get_int(sec, "space", "L", cfg.L);
    get_int(sec, "space", "L0", cfg.L0);
    get_int(sec, "space", "S", cfg.S);
    get_real(sec, "space", "gamma", cfg.gamma);
    get_int(sec, "space", "q", cfg.q);
    std::string variant = to_string(cfg.variant);
    get_string(sec, "space", "variant", variant);
    cfg.variant = variant_from(variant);
    get_real(sec, "space", "tolerance", cfg.spatial_tolerance);
    get_int(sec, "space", "max_iterations", cfg.spatial_max_iterations);
  }

  if (root.contains("time")) {
    const json& sec = root.at("time");
    if (!sec.is_object()) fail("time must be an object");
    check_keys(sec, "time", {"steps", "steps_hat", "segments"});
    if (sec.contains("steps") && sec.contains("steps_hat"))
      fail("time.steps and time.steps_hat are mutually exclusive");
    get_index(sec, "time", "steps", cfg.steps);
    get_index(sec, "time", "steps_hat", cfg.steps_hat);
    get_int(sec, "time", "segments", cfg.segments);
  }
  if (cfg.steps == 0 && cfg.steps_hat == 0) cfg.steps_hat = 1;

  if (root.contains("mgrit")) {
    const json& sec = root.at("mgrit");
    if (!sec.is_object()) fail("mgrit must be an object");
    check_keys(sec, "mgrit", {"coarsening", "n_relax", "tolerance", "max_iterations"});
    get_int(sec, "mgrit", "coarsening", cfg.coarsening);
    get_int(sec, "mgrit", "n_relax", cfg.n_relax);
    get_real(sec, "mgrit", "tolerance", cfg.mgrit_tolerance);
    get_int(sec, "mgrit", "max_iterations", cfg.mgrit_max_iterations);
  }

  if (root.contains("run")) {
    const json& sec = root.at("run");
    if (!sec.is_object()) fail("run must be an object");
    check_keys(sec, "run", {"algorithm", "temporal_tasks", "parallel_degree", "seed"});
    std::string algorithm = to_string(cfg.algorithm);
    get_string(sec, "run", "algorithm", algorithm);
    cfg.algorithm = algorithm_from(algorithm);
    get_index(sec, "run", "temporal_tasks", cfg.temporal_tasks);
    get_int(sec, "run", "parallel_degree", cfg.parallel_degree);
    get_u64(sec, "run", "seed", cfg.seed);
  }

  if (root.contains("probe")) {
    const json& sec = root.at("probe");
    if (!sec.is_object()) fail("probe must be an object");
    check_keys(sec, "probe", {"point"});
    if (sec.contains("point")) {
      const json& point = sec.at("point");
      if (!point.is_array()) fail("probe.point must be an array of numbers");
      for (const json& v : point) {
        if (!v.is_number()) fail("probe.point must be an array of numbers");
        cfg.probe_point.push_back(v.get<Real>());
      }
    }
  }

  if (root.contains("ssa")) {
    const json& sec = root.at("ssa");
    if (!sec.is_object()) fail("ssa must be an object");
    check_keys(sec, "ssa", {"trajectories"});
    get_index(sec, "ssa", "trajectories", cfg.ssa_trajectories);
  }

  if (root.contains("output")) {
    const json& sec = root.at("output");
    if (!sec.is_object()) fail("output must be an object");
    check_keys(sec, "output", {"dir"});
    get_string(sec, "output", "dir", cfg.output_dir);
  }

  validate_config(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string config_json(const RunConfig& config) {
  json j;
  j["problem"]["kind"] = to_string(config.problem);
  j["problem"]["d"] = problem_dim(config);
  j["problem"]["t_end"] = config.t_end;

  j["space"]["L"] = config.L;
  j["space"]["L0"] = config.L0;
  j["space"]["S"] = config.S;
  j["space"]["gamma"] = config.gamma;
  j["space"]["q"] = config.q;
  j["space"]["variant"] = to_string(config.variant);
  j["space"]["tolerance"] = config.spatial_tolerance;
  j["space"]["max_iterations"] = config.spatial_max_iterations;

  j["time"]["steps"] = total_steps(config);
  j["time"]["segments"] = config.segments;

  j["mgrit"]["coarsening"] = config.coarsening;
  j["mgrit"]["n_relax"] = config.n_relax;
  j["mgrit"]["tolerance"] = config.mgrit_tolerance;
  j["mgrit"]["max_iterations"] = config.mgrit_max_iterations;

  j["run"]["algorithm"] = to_string(config.algorithm);
  j["run"]["temporal_tasks"] = config.temporal_tasks;
  j["run"]["parallel_degree"] = config.parallel_degree;
  j["run"]["seed"] = config.seed;

  if (!config.probe_point.empty()) j["probe"]["point"] = config.probe_point;
  if (config.ssa_trajectories > 0) j["ssa"]["trajectories"] = config.ssa_trajectories;
  if (!config.output_dir.empty()) j["output"]["dir"] = config.output_dir;

  return j.dump(2) + "\n";
}

}  // namespace ctmg
