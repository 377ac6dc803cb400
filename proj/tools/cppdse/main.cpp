#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cppdse/report.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mapping and design-space exploration for tiled accelerator templates"};
  app.set_version_flag("--version", std::string(cppdse::tool_name) + " " + cppdse::tool_version);
  app.require_subcommand(1);

  cppdse::cli_options opts;

  auto add_common = [&](CLI::App* sub, bool needs_point) {
    sub->add_option("--kernel", opts.kernel_path, "kernel description (JSON)")
        ->required();
    sub->add_option("--report", opts.report_path, "synthesis report with loop/module samples (JSON)")
        ->required();
    sub->add_option("--platform", opts.platform_path,
                    "device description (JSON); omit for the built-in default");
    sub->add_option("--out-dir", opts.out_dir, "directory for JSON/CSV artifacts (default: .)");
    if (needs_point)
      sub->add_option("--point", opts.point_path,
                      "design point (JSON); omit for the minimal configuration");
  };

  CLI::App* check = app.add_subcommand("check", "test whether the kernel maps onto the template");
  add_common(check, false);

  CLI::App* space = app.add_subcommand("space", "print the tunable parameters and their ranges");
  add_common(space, false);

  CLI::App* est = app.add_subcommand("estimate", "predict cycles and resources for one point");
  add_common(est, true);

  CLI::App* expl = app.add_subcommand("explore", "search the space for the fastest feasible point");
  add_common(expl, false);
  expl->add_option("--budget-secs", opts.budget_secs, "wall-clock budget in seconds");
  expl->add_option("--budget-evals", opts.budget_evals,
                   "stop after this many evaluations (0 = time budget only)");
  expl->add_option("--seed", opts.seed, "random seed");
  expl->add_option("--jobs", opts.jobs, "worker threads for batch evaluation")
      ->check(CLI::PositiveNumber);
  expl->add_flag("--trace", opts.trace, "write trace.csv with the best-so-far trajectory");

  CLI::App* sim = app.add_subcommand("simulate", "replay the tile pipeline and compare with the model");
  add_common(sim, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message
    return cppdse::exit_usage;
  }

  if (check->parsed()) opts.subcommand = "check";
  else if (space->parsed()) opts.subcommand = "space";
  else if (est->parsed()) opts.subcommand = "estimate";
  else if (expl->parsed()) opts.subcommand = "explore";
  else opts.subcommand = "simulate";

  if (opts.subcommand == "check") return cppdse::cmd_check(opts, std::cout, std::cerr);
  if (opts.subcommand == "space") return cppdse::cmd_space(opts, std::cout, std::cerr);
  if (opts.subcommand == "estimate") return cppdse::cmd_estimate(opts, std::cout, std::cerr);
  if (opts.subcommand == "explore") return cppdse::cmd_explore(opts, std::cout, std::cerr);
  return cppdse::cmd_simulate(opts, std::cout, std::cerr);
}
