#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "varchen/errors.hpp"
#include "varchen/experiment.hpp"
#include "varchen/verify.hpp"

namespace {

constexpr int kExitParseError = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitIoError = 4;

int do_run(const std::string& spec_path, const varchen::CliOverrides& overrides) {
  varchen::ExperimentSpec spec;
  try {
    spec = varchen::parse_spec_file(spec_path);
  } catch (const varchen::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParseError;
  }

  std::vector<varchen::RunOutputs> outputs;
  try {
    outputs = varchen::run_experiment(spec, overrides);
  } catch (const varchen::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParseError;
  } catch (const varchen::InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitParseError;
  } catch (const std::exception& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIoError;
  }

  bool diverged = false;
  for (const auto& out : outputs) {
    std::cout << varchen::method_name(out.method) << " seed " << out.seed << " -> "
              << out.trace_csv;
    if (out.aborted) {
      std::cout << "  [diverged: " << out.diagnostic << "]";
      diverged = true;
    }
    std::cout << "\n";
  }
  return diverged ? kExitDiverged : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"varchen: variance-reduced stochastic damped L-BFGS with monitored eigenvalue bounds"};
  app.require_subcommand(0, 1);

  bool help_config = false;
  app.add_flag("--help-config", help_config, "Print the experiment spec schema and exit");

  std::string spec_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> jobs;

  CLI::App* run_cmd = app.add_subcommand("run", "Run the experiments described by a spec file");
  run_cmd->add_option("spec", spec_path, "Path to the spec file")->required();
  run_cmd->add_option("--out", [&out_dir](const CLI::results_t& values) {
    out_dir = values.front();
    return true;
  }, "Output directory (overrides the spec and $VARCHEN_OUT)");
  run_cmd->add_option("--seed", [&seed_override](const CLI::results_t& values) {
    seed_override = std::stoull(values.front());
    return true;
  }, "Replace the spec's seed list with a single seed");
  run_cmd->add_option("--jobs", [&jobs](const CLI::results_t& values) {
    jobs = std::stoi(values.front());
    return true;
  }, "Maximum concurrent runs");

  bool mutate_bounds = false;
  std::uint64_t verify_seed = 20240801;
  CLI::App* verify_cmd =
      app.add_subcommand("verify", "Run the dense-oracle containment, equivalence, and gradient suites");
  verify_cmd->add_flag("--mutate-bounds", mutate_bounds,
                       "Test fixture: perturb the computed bounds so the containment suites must fail");
  verify_cmd->add_option("--seed", verify_seed, "Base seed for the randomized suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitParseError;
  }

  if (help_config) {
    std::cout << varchen::help_config_text();
    return 0;
  }
  if (run_cmd->parsed()) {
    return do_run(spec_path, varchen::CliOverrides{out_dir, seed_override, jobs});
  }
  if (verify_cmd->parsed()) {
    return varchen::run_verify(std::cout, mutate_bounds, verify_seed);
  }
  std::cout << app.help();
  return 0;
}
