// momentlab command-line front end.
//
// Exit status: 0 success, 1 a requested check failed, 2 invalid input or
// usage, 3 numerical or I/O failure.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "momentlab/config.hpp"
#include "momentlab/experiment.hpp"
#include "momentlab/invariants.hpp"
#include "momentlab/presets.hpp"

using namespace momentlab;

namespace {

int execute(cli::ExperimentConfig cfg, const std::string& out, const std::vector<std::string>& overrides,
            int workers) {
  if (!out.empty()) {
    cfg.output = out;
    cfg.source["output"] = out;
  }
  for (const auto& o : overrides) cli::apply_tolerance_override(cfg, o);
  const auto rep = cli::run_experiment(cfg, workers);
  std::printf("%d task(s), %zu file(s) written to %s\n", rep.tasks, rep.files.size(), rep.output.string().c_str());
  if (!rep.checks_passed) {
    std::fprintf(stderr, "some checks failed; see %s/summary.json\n", rep.output.string().c_str());
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"momentlab: spectral moments, closed walks, responses and wave-packet dynamics on lattices"};
  app.set_version_flag("--version", std::string(MOMENTLAB_VERSION));
  app.require_subcommand(1);

  int workers = 1;
  std::vector<std::string> overrides;
  app.add_option("--workers", workers, "worker threads for sweep points")->check(CLI::Range(1, 256));
  app.add_option("--tol-override", overrides, "override a named tolerance, key=value (repeatable)");

  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  std::string config_path, run_out;
  run->add_option("config", config_path, "config file")->required();
  run->add_option("--out", run_out, "output directory (overrides the config)");

  auto* pre = app.add_subcommand("preset", "run a built-in experiment");
  std::string preset_name, preset_out;
  std::uint64_t seed = 0;
  bool print_only = false;
  pre->add_option("name", preset_name, "preset name")->required();
  pre->add_option("--out", preset_out, "output directory");
  pre->add_option("--seed", seed, "seed for stochastic steps");
  pre->add_flag("--print", print_only, "print the preset config instead of running it");

  auto* list = app.add_subcommand("presets", "list the built-in experiments");
  auto* check = app.add_subcommand("check", "run the invariant suite");

  // Options given after the subcommand belong to it; allow the global ones there too.
  for (auto* sub : {run, pre, check}) {
    sub->add_option("--workers", workers, "worker threads for sweep points")->check(CLI::Range(1, 256));
    sub->add_option("--tol-override", overrides, "override a named tolerance, key=value (repeatable)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*list) {
      for (const auto& n : cli::preset_names()) std::printf("%s\n", n.c_str());
      return 0;
    }
    if (*check) {
      auto tol = cli::default_tolerances();
      cli::ExperimentConfig scratch;
      for (const auto& o : overrides) cli::apply_tolerance_override(scratch, o);
      tol = scratch.tolerances;
      int failed = 0;
      for (const auto& r : cli::run_invariant_suite(tol)) {
        std::printf("%s %-28s value=%-12.4g tol=%-10.3g %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.value,
                    r.tolerance, r.detail.c_str());
        failed += !r.passed;
      }
      std::printf("%s: %d check(s) failed\n", failed ? "FAILED" : "OK", failed);
      return failed ? 1 : 0;
    }
    if (*run) return execute(cli::load_config(config_path), run_out, overrides, workers);
    if (*pre) {
      auto doc = cli::preset(preset_name);
      if (pre->count("--seed")) doc["seed"] = seed;
      if (print_only) {
        std::cout << doc.dump(2) << "\n";
        return 0;
      }
      return execute(cli::parse_config(doc), preset_out, overrides, workers);
    }
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
