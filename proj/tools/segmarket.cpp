#include "commands.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>

using namespace segmarket;
using namespace segmarket::cli;

namespace {

std::shared_ptr<spdlog::logger> make_logger() {
  auto log = spdlog::stderr_color_mt("segmarket");
  log->set_pattern("[%l] %v");
  const char* env = std::getenv("SEGMARKET_LOG");
  log->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
  return log;
}

}  // namespace

int main(int argc, char** argv) {
  auto log = make_logger();

  CLI::App app{"Equilibrium solver for a search market with statistical discrimination"};
  app.require_subcommand(1);
  std::string config_path, out_path, format = "table";
  CommandOptions opts;
  std::uint64_t seed = 0;
  double tol = 0.0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_path, "write the report here instead of stdout");
    sub->add_option("--format", format, "json, csv or table")
        ->check(CLI::IsMember({"json", "csv", "table"}));
    sub->add_option("--tol", tol, "inclusion tolerance for equilibrium classification");
  };
  auto* bounds = app.add_subcommand("bounds", "belief bounds, values and entry viability");
  auto* solve = app.add_subcommand("solve", "all single-group equilibria");
  auto* groups = app.add_subcommand("groups", "symmetric and discriminatory two-group equilibria");
  auto* figure = app.add_subcommand("figure", "x/y data for a figure");
  auto* simulate = app.add_subcommand("simulate", "flow, Monte Carlo or fragility runs");
  auto* sweep = app.add_subcommand("sweep", "equilibrium classification over one parameter");
  for (auto* s : {bounds, solve, groups, figure, simulate, sweep}) common(s);
  solve->add_flag("--oracle", opts.oracle, "verify each equilibrium with the flow oracle");
  groups->add_flag("--oracle", opts.oracle, "verify each equilibrium with the flow oracle");
  groups->add_flag("--prop6", opts.prop6, "group-mass sweep around the symmetric mixed equilibrium");
  groups->add_flag("--quota", opts.quota, "equal-hiring quota check");
  figure->add_option("id", opts.figure_id, "G0, G1-low, G1-high, disc or lambda");
  simulate->add_option("--seed", seed, "Monte Carlo seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  for (auto* s : {bounds, solve, groups, figure, simulate, sweep})
    if (s->count("--tol")) opts.tol = tol;
  if (simulate->count("--seed")) opts.seed = seed;
  const Format fmt = format == "json" ? Format::Json : format == "csv" ? Format::Csv : Format::Table;

  try {
    const RunConfig cfg = load_config(config_path);
    log->info("loaded {}", config_path);
    const auto t0 = std::chrono::steady_clock::now();
    Report report;
    if (*bounds) report = cmd_bounds(cfg);
    else if (*solve) report = cmd_solve(cfg, opts);
    else if (*groups) report = cmd_groups(cfg, opts);
    else if (*figure) report = cmd_figure(cfg, opts);
    else if (*simulate) report = cmd_simulate(cfg, opts);
    else report = cmd_sweep(cfg, opts);
    log->info("{} finished in {:.3f} s", report.command,
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());

    if (out_path.empty()) {
      write_report(std::cout, report, fmt);
    } else {
      std::ofstream out(out_path, std::ios::binary);
      if (!out) throw ConfigError("cannot write '" + out_path + "'");
      write_report(out, report, fmt);
      log->info("wrote {}", out_path);
    }
    return 0;
  } catch (const ConfigError& e) {
    log->error("config: {}", e.what());
    return 2;
  } catch (const ParamDomain& e) {
    log->error("config: {}", e.what());
    return 2;
  } catch (const InternalInconsistency& e) {
    log->error("internal inconsistency: {}", e.what());
    return 4;
  } catch (const Error& e) {
    log->error("numerical precondition: {}", e.what());
    return 3;
  }
}
