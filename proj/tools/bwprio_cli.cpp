// bwprio: run the bandwidth-prioritization experiments from a config file.
//
// Exit codes: 0 success, 1 validation error, 2 property-suite failure,
// 3 runtime budget exceeded.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "bwprio/config.hpp"
#include "bwprio/experiments.hpp"
#include "bwprio/report.hpp"
#include "bwprio/verify.hpp"
#include "json.hpp"

using namespace bwprio;

namespace {

enum Exit { kOk = 0, kValidation = 1, kSuiteFailed = 2, kOverBudget = 3 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs;
  std::string out_dir;
  std::string format = "csv";
  unsigned jobs = 1;
  std::optional<double> budget;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config) {
  auto* opt = cmd->add_option("--config", c.config, "Scenario config (YAML)");
  if (needs_config) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Override the master seed");
  cmd->add_option("--runs", c.runs, "Override the number of Monte Carlo runs")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out-dir", c.out_dir, "Output directory (default $BWPRIO_OUT_DIR or ./out)");
  cmd->add_option("--format", c.format, "Result table format")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--jobs", c.jobs, "Worker threads for independent sessions")
      ->check(CLI::Range(1u, 1024u));
  cmd->add_option("--budget", c.budget, "Runtime budget in seconds (exit 3 when exceeded)")
      ->check(CLI::PositiveNumber);
}

std::filesystem::path out_dir(const Common& c, const std::string& experiment) {
  std::filesystem::path base = c.out_dir;
  if (base.empty()) {
    const char* env = std::getenv("BWPRIO_OUT_DIR");
    base = env && *env ? env : "out";
  }
  return base / experiment;
}

RunOptions run_options(const Common& c) { return {c.seed, c.runs, c.jobs}; }

std::string render(const ResultTable& table, const std::string& format) {
  std::ostringstream s;
  if (format == "json") {
    write_json(s, table);
  } else {
    write_csv(s, table);
  }
  return s.str();
}

void write_summary(const std::filesystem::path& dir, const std::string& command,
                   const ExperimentConfig& config, const Common& c, const ResultTable& table) {
  nlohmann::ordered_json doc;
  doc["experiment_id"] = config.experiment_id;
  doc["command"] = command;
  doc["seed"] = c.seed.value_or(config.seed);
  doc["runs"] = c.runs.value_or(config.runs);
  nlohmann::ordered_json arms = nlohmann::ordered_json::array();
  for (const auto& a : config.mechanisms) arms.push_back(a.name);
  doc["mechanisms"] = arms;
  std::ostringstream rows;
  write_json(rows, table);
  doc["results"] = nlohmann::ordered_json::parse(rows.str())["rows"];
  write_file(dir, "summary.json", doc.dump(2) + "\n");
}

int finish(const Common& c, std::optional<double> config_budget,
           std::chrono::steady_clock::time_point start) {
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto budget = c.budget ? c.budget : config_budget;
  if (budget && elapsed > *budget) {
    std::cerr << "runtime budget exceeded: " << elapsed << " s > " << *budget << " s\n";
    return kOverBudget;
  }
  return kOk;
}

int cmd_simulate(const Common& c) {
  const auto start = std::chrono::steady_clock::now();
  const auto config = load_config(c.config);
  const auto result = simulate(config, run_options(c));
  const auto dir = out_dir(c, config.experiment_id);
  write_file(dir, "results." + c.format, render(result.table, c.format));
  std::ostringstream trace;
  write_trace_csv(trace, result.traces);
  write_file(dir, "trace.csv", trace.str());
  write_summary(dir, "simulate", config, c, result.table);
  std::cout << "wrote " << (dir / ("results." + c.format)).string() << '\n';
  return finish(c, config.budget_seconds, start);
}

int cmd_sweep(const Common& c, const std::string& variable, const std::vector<double>& values) {
  const auto start = std::chrono::steady_clock::now();
  const auto config = load_config(c.config);
  SweepConfig grid;
  if (!variable.empty()) {
    grid.variable = parse_sweep_variable(variable);
    if (values.empty()) {
      if (!config.sweep || config.sweep->variable != grid.variable) {
        throw std::invalid_argument("--values is required when the config has no " + variable +
                                    " sweep");
      }
      grid.values = config.sweep->values;
    } else {
      grid.values = values;
    }
  } else if (config.sweep) {
    grid = *config.sweep;
    if (!values.empty()) grid.values = values;
  } else {
    throw std::invalid_argument("config has no sweep block; pass --variable and --values");
  }
  const auto table = sweep(config, grid, run_options(c));
  const auto dir = out_dir(c, config.experiment_id);
  write_file(dir, "results." + c.format, render(table, c.format));
  write_summary(dir, "sweep", config, c, table);
  std::cout << "wrote " << (dir / ("results." + c.format)).string() << '\n';
  return finish(c, config.budget_seconds, start);
}

int cmd_pool(const Common& c) {
  const auto start = std::chrono::steady_clock::now();
  const auto config = load_config(c.config);
  if (!config.pool) throw std::invalid_argument(c.config + ": config has no pool block");
  const auto report = run_pool(config, run_options(c));
  const auto dir = out_dir(c, config.experiment_id);
  write_file(dir, "results." + c.format, render(report.table, c.format));
  std::ostringstream sellers;
  write_pool_sellers_csv(sellers, report.sellers);
  write_file(dir, "pool_sellers.csv", sellers.str());
  write_summary(dir, "pool", config, c, report.table);
  for (const auto& t : report.trials) {
    std::cout << "trial " << t.trial << ": tax " << format_number(t.tax[0]) << " / "
              << format_number(t.tax[1]) << ", center residual " << format_number(t.center_residual)
              << ", relative imbalance " << format_number(t.relative_imbalance) << '\n';
  }
  std::cout << "wrote " << (dir / ("results." + c.format)).string() << '\n';
  return finish(c, config.budget_seconds, start);
}

int cmd_verify(const Common& c, const std::string& suite) {
  const auto start = std::chrono::steady_clock::now();
  SuiteOptions options;
  options.seed = c.seed.value_or(1);
  options.runs = c.runs;
  options.jobs = c.jobs;
  const auto report = run_suite(suite, options);
  for (const auto& line : report.lines) std::cout << "  " << line << '\n';
  std::cout << (report.passed ? "PASS " : "FAIL ") << report.suite << ": " << report.summary << '\n';
  if (!report.passed) return kSuiteFailed;
  return finish(c, std::nullopt, start);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bandwidth prioritization simulator"};
  app.require_subcommand(1);
  Common common;

  auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo over every configured mechanism");
  add_common(simulate_cmd, common, true);

  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep capacity, reserve or mu");
  add_common(sweep_cmd, common, true);
  std::string variable;
  std::vector<double> values;
  sweep_cmd->add_option("--variable", variable, "capacity, reserve or mu");
  sweep_cmd->add_option("--values", values, "Grid points")->delimiter(',');

  auto* pool_cmd = app.add_subcommand("pool", "Settle a seller pool and compare revenues");
  add_common(pool_cmd, common, true);

  auto* verify_cmd = app.add_subcommand("verify", "Run a property suite");
  add_common(verify_cmd, common, false);
  std::string suite;
  verify_cmd->add_option("suite,--suite", suite, "Suite name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }
  if (common.jobs == 0) common.jobs = std::max(1u, std::thread::hardware_concurrency());

  try {
    if (*simulate_cmd) return cmd_simulate(common);
    if (*sweep_cmd) return cmd_sweep(common, variable, values);
    if (*pool_cmd) return cmd_pool(common);
    if (*verify_cmd) return cmd_verify(common, suite);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kValidation;
}
