#pragma once

#include <exception>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spinwave/lab.hpp"

namespace spinwave::lab {

enum ExitCode : int { kOk = 0, kNumerical = 1, kUsage = 2 };

// spinwave-lab <scenario> [--config file.json] [--set key=value ...] [--out dir] [--seed n]
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"spinwave-lab: regenerate scenario tables as CSV plus a JSON manifest", "spinwave-lab"};
  app.footer(usage_text());
  RunRequest req;
  bool list_keys = false;
  app.add_option("scenario", req.scenario, "scenario name")->required();
  app.add_option("--config", req.config_file, "flat JSON object of parameter overrides");
  app.add_option("--set", req.sets, "parameter override key=value (repeatable)")->take_all();
  app.add_option("--out", req.out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", req.seed, "random seed")->capture_default_str();
  app.add_flag("--gnuplot-hints", req.gnuplot_hints, "also write a plotting hints file");
  app.add_flag("--list-keys", list_keys, "print the scenario's parameter keys and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << usage_text();
    return kUsage;
  }
  try {
    if (list_keys) {
      const Scenario* s = find_scenario(req.scenario);
      if (!s) throw UsageError("unknown scenario: " + req.scenario);
      out << scenario_keys(*s);
      return kOk;
    }
    for (const auto& f : run(req)) out << f << "\n";
    return kOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << usage_text();
    return kUsage;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::logic_error& e) {
    err << "invalid input: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return kNumerical;
  }
}

}  // namespace spinwave::lab
