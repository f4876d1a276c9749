#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "varchen/optimizer.hpp"
#include "varchen/problems.hpp"

namespace varchen {

struct ProblemSpec {
  std::string kind = "synthetic-logistic";  // logistic | sigmoid-svm | synthetic | synthetic-logistic
  std::string dataset_path;
  std::string dataset_format = "auto";  // auto | libsvm | csv
  std::string validation_path;
  double l2 = 0.0;
  int positive_class = std::numeric_limits<int>::min();  // sentinel: no one-vs-rest reduction
  Index synthetic_n = 20;
  Index synthetic_samples = 200;
  double cond = 1e4;
  double nonconvex_mix = 0.3;
  std::uint64_t problem_seed = 1;
  double label_noise = 0.05;
};

struct ExperimentSpec {
  ProblemSpec problem;
  std::vector<Method> methods{Method::kVarchen};
  std::vector<std::uint64_t> seeds{1};
  OptimizerConfig base;  // method and seed are filled per run
  std::string out_dir;   // empty = default_out_dir()
  int jobs = 1;
};

/// Key-value spec file (`key = value`, `#` comments). Schema printed by
/// --help-config. Throws ParseError with 1-based line/column.
ExperimentSpec parse_spec_file(const std::string& path);
ExperimentSpec parse_spec_text(const std::string& text, const std::string& name);

std::unique_ptr<FiniteSumProblem> make_problem(const ProblemSpec& spec);

struct CliOverrides {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
};

struct RunOutputs {
  Method method;
  std::uint64_t seed;
  std::string trace_csv;
  std::string epoch_csv;
  std::string manifest;
  bool aborted = false;
  std::string diagnostic;
};

/// Fan runs out over methods x seeds, up to `jobs` at a time, one writer per
/// trace file. Throws on I/O failure; divergence is reported per run.
std::vector<RunOutputs> run_experiment(const ExperimentSpec& spec, const CliOverrides& overrides = {});

/// VARCHEN_OUT env var, falling back to "runs".
std::string default_out_dir();

std::string help_config_text();

}  // namespace varchen
