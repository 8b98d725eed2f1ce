#include "ctmg/cli.hpp"

#include "ctmg/config.hpp"
#include "ctmg/runner.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <sstream>
#include <stdexcept>

namespace ctmg {

namespace {

std::vector<Real> parse_point(const std::string& text) {
  std::vector<Real> point;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    try {
      std::size_t used = 0;
      point.push_back(std::stod(item, &used));
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw std::invalid_argument("--point must be a comma separated list of numbers");
    }
  }
  if (point.empty())
    throw std::invalid_argument("--point must be a comma separated list of numbers");
  return point;
}

void print_report(const RunReport& report, const std::string& dir) {
  std::cout << "subproblems: " << report.subproblems << " (tasks local " << report.local_tasks
            << ", block " << report.block_tasks << ")\n";
  if (report.stats.mgrit_solves > 0)
    std::cout << "mgrit: " << report.stats.mgrit_solves << " solves, "
              << report.stats.mgrit_cycles << " cycles total, peak "
              << report.stats.peak_mgrit_cycles << "\n";
  std::cout << "krylov: " << report.stats.spatial.solves << " solves, "
            << report.stats.spatial.total_iterations << " iterations\n";
  for (const OracleErrorRow& row : report.errors)
    std::cout << "error[" << row.oracle << "/" << row.metric << "] = " << row.value << "\n";
  if (report.has_mass)
    std::cout << "mass: " << report.mass_initial << " -> " << report.mass_final << "\n";
  std::cout << "wrote " << dir << "/summary.json\n";
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"sparse grid combination solver with multigrid in time"};
  app.require_subcommand(1);

  std::string config_path, out_dir, point_text;
  int l_min = 0, l_max = 0;
  bool hold_steps = false;

  CLI::App* run = app.add_subcommand("run", "execute one configured experiment");
  run->add_option("-c,--config", config_path, "JSON config file")->required();
  run->add_option("-o,--out", out_dir, "output directory (overrides config and CTMGRIT_OUT_DIR)");

  CLI::App* study = app.add_subcommand("study", "convergence study over a range of levels");
  study->add_option("-c,--config", config_path, "JSON config file")->required();
  study->add_option("--l-min", l_min, "first target level")->required();
  study->add_option("--l-max", l_max, "last target level")->required();
  study->add_flag("--hold-steps", hold_steps,
                  "keep the step count fixed instead of refining it fourfold per level");
  study->add_option("-o,--out", out_dir, "output directory");

  CLI::App* probe = app.add_subcommand("probe", "record the solution at a point over time");
  probe->add_option("-c,--config", config_path, "JSON config file")->required();
  probe->add_option("-p,--point", point_text,
                    "comma separated coordinates (overrides probe.point)");
  probe->add_option("-o,--out", out_dir, "output directory");

  CLI::App* validate = app.add_subcommand("validate-config", "parse and echo the effective config");
  validate->add_option("-c,--config", config_path, "JSON config file")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig config = load_config(config_path);

    if (validate->parsed()) {
      std::cout << config_json(config);
      return 0;
    }
    if (run->parsed()) {
      std::string dir = out_dir.empty() ? default_output_dir(config) : out_dir;
      RunReport report = run_experiment(config, dir);
      print_report(report, dir);
      return 0;
    }
    if (probe->parsed()) {
      if (!point_text.empty()) config.probe_point = parse_point(point_text);
      if (config.probe_point.empty())
        throw std::invalid_argument("probe.point is required (set it in the config or pass --point)");
      validate_config(config);
      std::string dir = out_dir.empty() ? default_output_dir(config) : out_dir;
      RunReport report = run_experiment(config, dir);
      print_report(report, dir);
      std::cout << "wrote " << dir << "/probe.csv (" << report.probe.size() << " rows)\n";
      return 0;
    }
    if (study->parsed()) {
      std::string dir = out_dir.empty() ? default_output_dir(config) : out_dir;
      StudyReport report = run_study(config, l_min, l_max, !hold_steps, dir);
      for (const StudyRow& row : report.rows)
        std::cout << "L=" << row.L << " steps=" << row.steps << " error=" << row.error << "\n";
      std::cout << "observed order (" << report.oracle << "): " << report.observed_order << "\n";
      std::cout << "wrote " << dir << "/study.json\n";
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace ctmg
