#include "varchen/experiment.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "varchen/dataset_io.hpp"
#include "varchen/errors.hpp"
#include "varchen/trace_io.hpp"

namespace varchen {

namespace {

struct SpecLine {
  std::string key;
  std::string value;
  int line_no;
  int value_col;
};

std::vector<SpecLine> tokenize_spec(const std::string& text, const std::string& name) {
  std::vector<SpecLine> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::size_t begin = line.find_first_not_of(" \t");
    if (begin == std::string::npos) continue;
    const auto eq = line.find('=', begin);
    if (eq == std::string::npos) {
      throw ParseError(name, line_no, static_cast<int>(begin) + 1, "expected 'key = value'");
    }
    std::size_t key_end = line.find_last_not_of(" \t", eq - 1);
    if (key_end == std::string::npos || key_end < begin) {
      throw ParseError(name, line_no, static_cast<int>(begin) + 1, "missing key before '='");
    }
    std::size_t val_begin = line.find_first_not_of(" \t", eq + 1);
    if (val_begin == std::string::npos) {
      throw ParseError(name, line_no, static_cast<int>(eq) + 2, "missing value after '='");
    }
    std::size_t val_end = line.find_last_not_of(" \t");
    out.push_back({line.substr(begin, key_end - begin + 1),
                   line.substr(val_begin, val_end - val_begin + 1), line_no,
                   static_cast<int>(val_begin) + 1});
  }
  return out;
}

double parse_double_value(const SpecLine& sl, const std::string& name) {
  double v = 0;
  const char* b = sl.value.data();
  const char* e = b + sl.value.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) {
    throw ParseError(name, sl.line_no, sl.value_col, "expected a number for '" + sl.key + "'");
  }
  return v;
}

long long parse_int_value(const SpecLine& sl, const std::string& name) {
  long long v = 0;
  const char* b = sl.value.data();
  const char* e = b + sl.value.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) {
    throw ParseError(name, sl.line_no, sl.value_col, "expected an integer for '" + sl.key + "'");
  }
  return v;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> parts;
  std::string token;
  std::istringstream in(value);
  while (std::getline(in, token, ',')) {
    const auto b = token.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = token.find_last_not_of(" \t");
    parts.push_back(token.substr(b, e - b + 1));
  }
  return parts;
}

// "name:number" tail, e.g. schedule = harmonic:0.1 or lg-mode = fixed:10
double parse_tail_number(const SpecLine& sl, const std::string& name, std::size_t colon) {
  const std::string tail = sl.value.substr(colon + 1);
  double v = 0;
  const char* b = tail.data();
  const char* e = b + tail.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) {
    throw ParseError(name, sl.line_no, sl.value_col + static_cast<int>(colon) + 1,
                     "expected a number after ':' in '" + sl.key + "'");
  }
  return v;
}

std::string schedule_to_string(const OptimizerConfig& config) {
  const char* kind = config.schedule == ScheduleKind::kConstant   ? "constant"
                     : config.schedule == ScheduleKind::kHarmonic ? "harmonic"
                                                                  : "power";
  return std::string(kind) + ":" + format_double(config.schedule_value);
}

// Ordered key=value dump shared by the manifest and the config hash.
std::vector<std::pair<std::string, std::string>> config_items(const ProblemSpec& problem,
                                                              const OptimizerConfig& config) {
  std::vector<std::pair<std::string, std::string>> items;
  items.emplace_back("problem", problem.kind);
  items.emplace_back("dataset", problem.dataset_path);
  items.emplace_back("dataset-format", problem.dataset_format);
  items.emplace_back("validation-dataset", problem.validation_path);
  items.emplace_back("l2", format_double(problem.l2));
  if (problem.positive_class != std::numeric_limits<int>::min()) {
    items.emplace_back("positive-class", std::to_string(problem.positive_class));
  }
  items.emplace_back("synthetic-n", std::to_string(problem.synthetic_n));
  items.emplace_back("synthetic-samples", std::to_string(problem.synthetic_samples));
  items.emplace_back("cond", format_double(problem.cond));
  items.emplace_back("nonconvex-mix", format_double(problem.nonconvex_mix));
  items.emplace_back("problem-seed", std::to_string(problem.problem_seed));
  items.emplace_back("label-noise", format_double(problem.label_noise));
  items.emplace_back("method", method_name(config.method));
  items.emplace_back("memory", std::to_string(config.memory_p));
  items.emplace_back("eta", format_double(config.eta));
  items.emplace_back("lambda-min", format_double(config.lambda_min));
  items.emplace_back("lambda-max", format_double(config.lambda_max));
  items.emplace_back("gamma-lo", format_double(config.gamma_lo));
  items.emplace_back("gamma-hi", format_double(config.gamma_hi));
  items.emplace_back("scaling-clamp-mode",
                     config.clamp_mode == ScalingClampMode::kH0Scalar ? "h0-scalar" : "b0-scalar");
  items.emplace_back("lg-mode", config.lg_mode == LgMode::kPerPair      ? "per-pair"
                                : config.lg_mode == LgMode::kRunningMax ? "running-max"
                                                                        : "fixed:" + format_double(config.lg_fixed));
  items.emplace_back("curvature-gradient",
                     config.curvature_gradient == CurvatureGradient::kRaw ? "raw" : "corrected");
  items.emplace_back("schedule", schedule_to_string(config));
  items.emplace_back("lipschitz",
                     config.lipschitz_L > 0 ? format_double(config.lipschitz_L) : "auto");
  items.emplace_back("epochs", std::to_string(config.epochs));
  items.emplace_back("batch-size", std::to_string(config.batch_size));
  items.emplace_back("sampling", config.sampling == SamplingMode::kWithoutReplacementPerEpoch
                                     ? "without-replacement"
                                     : "with-replacement");
  items.emplace_back("grad-tol", format_double(config.grad_tol));
  items.emplace_back("seed", std::to_string(config.seed));
  return items;
}

std::string git_describe() {
  FILE* pipe = ::popen("git describe --always --dirty 2>/dev/null", "r");
  if (!pipe) return "unknown";
  char buf[128] = {0};
  std::string out;
  while (std::fgets(buf, sizeof(buf), pipe)) out += buf;
  ::pclose(pipe);
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  return out.empty() ? "unknown" : out;
}

}  // namespace

ExperimentSpec parse_spec_text(const std::string& text, const std::string& name) {
  ExperimentSpec spec;
  bool methods_seen = false;
  for (const SpecLine& sl : tokenize_spec(text, name)) {
    const std::string& key = sl.key;
    if (key == "problem") {
      if (sl.value != "logistic" && sl.value != "sigmoid-svm" && sl.value != "synthetic" &&
          sl.value != "synthetic-logistic") {
        throw ParseError(name, sl.line_no, sl.value_col, "unknown problem '" + sl.value + "'");
      }
      spec.problem.kind = sl.value;
    } else if (key == "dataset") {
      spec.problem.dataset_path = sl.value;
    } else if (key == "dataset-format") {
      if (sl.value != "auto" && sl.value != "libsvm" && sl.value != "csv") {
        throw ParseError(name, sl.line_no, sl.value_col, "dataset-format must be auto|libsvm|csv");
      }
      spec.problem.dataset_format = sl.value;
    } else if (key == "validation-dataset") {
      spec.problem.validation_path = sl.value;
    } else if (key == "l2") {
      spec.problem.l2 = parse_double_value(sl, name);
    } else if (key == "positive-class") {
      spec.problem.positive_class = static_cast<int>(parse_int_value(sl, name));
    } else if (key == "synthetic-n") {
      spec.problem.synthetic_n = static_cast<Index>(parse_int_value(sl, name));
    } else if (key == "synthetic-samples") {
      spec.problem.synthetic_samples = static_cast<Index>(parse_int_value(sl, name));
    } else if (key == "cond") {
      spec.problem.cond = parse_double_value(sl, name);
    } else if (key == "nonconvex-mix") {
      spec.problem.nonconvex_mix = parse_double_value(sl, name);
    } else if (key == "problem-seed") {
      spec.problem.problem_seed = static_cast<std::uint64_t>(parse_int_value(sl, name));
    } else if (key == "label-noise") {
      spec.problem.label_noise = parse_double_value(sl, name);
    } else if (key == "methods") {
      spec.methods.clear();
      for (const std::string& m : split_list(sl.value)) {
        const auto method = method_from_name(m);
        if (!method) throw ParseError(name, sl.line_no, sl.value_col, "unknown method '" + m + "'");
        spec.methods.push_back(*method);
      }
      if (spec.methods.empty()) {
        throw ParseError(name, sl.line_no, sl.value_col, "methods list is empty");
      }
      methods_seen = true;
    } else if (key == "seeds") {
      spec.seeds.clear();
      for (const std::string& s : split_list(sl.value)) {
        std::uint64_t v = 0;
        const char* b = s.data();
        auto [ptr, ec] = std::from_chars(b, b + s.size(), v);
        if (ec != std::errc() || ptr != b + s.size()) {
          throw ParseError(name, sl.line_no, sl.value_col, "seeds must be integers");
        }
        spec.seeds.push_back(v);
      }
      if (spec.seeds.empty()) throw ParseError(name, sl.line_no, sl.value_col, "seeds list is empty");
    } else if (key == "epochs") {
      spec.base.epochs = static_cast<int>(parse_int_value(sl, name));
    } else if (key == "batch-size") {
      spec.base.batch_size = static_cast<Index>(parse_int_value(sl, name));
    } else if (key == "memory") {
      spec.base.memory_p = static_cast<Index>(parse_int_value(sl, name));
    } else if (key == "eta") {
      spec.base.eta = parse_double_value(sl, name);
    } else if (key == "lambda-min") {
      spec.base.lambda_min = parse_double_value(sl, name);
    } else if (key == "lambda-max") {
      spec.base.lambda_max = parse_double_value(sl, name);
    } else if (key == "gamma-lo") {
      spec.base.gamma_lo = parse_double_value(sl, name);
    } else if (key == "gamma-hi") {
      spec.base.gamma_hi = parse_double_value(sl, name);
    } else if (key == "scaling-clamp-mode") {
      if (sl.value == "h0-scalar") {
        spec.base.clamp_mode = ScalingClampMode::kH0Scalar;
      } else if (sl.value == "b0-scalar") {
        spec.base.clamp_mode = ScalingClampMode::kB0Scalar;
      } else {
        throw ParseError(name, sl.line_no, sl.value_col, "scaling-clamp-mode must be h0-scalar|b0-scalar");
      }
    } else if (key == "lg-mode") {
      if (sl.value == "running-max") {
        spec.base.lg_mode = LgMode::kRunningMax;
      } else if (sl.value == "per-pair") {
        spec.base.lg_mode = LgMode::kPerPair;
      } else if (sl.value.rfind("fixed:", 0) == 0) {
        spec.base.lg_mode = LgMode::kFixed;
        spec.base.lg_fixed = parse_tail_number(sl, name, 5);
      } else {
        throw ParseError(name, sl.line_no, sl.value_col,
                         "lg-mode must be running-max|per-pair|fixed:<L>");
      }
    } else if (key == "curvature-gradient") {
      if (sl.value == "raw") {
        spec.base.curvature_gradient = CurvatureGradient::kRaw;
      } else if (sl.value == "corrected") {
        spec.base.curvature_gradient = CurvatureGradient::kCorrected;
      } else {
        throw ParseError(name, sl.line_no, sl.value_col, "curvature-gradient must be raw|corrected");
      }
    } else if (key == "schedule") {
      const auto colon = sl.value.find(':');
      const std::string kind = sl.value.substr(0, colon);
      if (colon == std::string::npos) {
        throw ParseError(name, sl.line_no, sl.value_col, "schedule needs a parameter, e.g. constant:0.05");
      }
      if (kind == "constant") {
        spec.base.schedule = ScheduleKind::kConstant;
      } else if (kind == "harmonic") {
        spec.base.schedule = ScheduleKind::kHarmonic;
      } else if (kind == "power") {
        spec.base.schedule = ScheduleKind::kPower;
      } else {
        throw ParseError(name, sl.line_no, sl.value_col, "schedule must be constant|harmonic|power");
      }
      spec.base.schedule_value = parse_tail_number(sl, name, colon);
    } else if (key == "lipschitz") {
      spec.base.lipschitz_L = sl.value == "auto" ? 0.0 : parse_double_value(sl, name);
    } else if (key == "sampling") {
      if (sl.value == "without-replacement") {
        spec.base.sampling = SamplingMode::kWithoutReplacementPerEpoch;
      } else if (sl.value == "with-replacement") {
        spec.base.sampling = SamplingMode::kWithReplacement;
      } else {
        throw ParseError(name, sl.line_no, sl.value_col,
                         "sampling must be without-replacement|with-replacement");
      }
    } else if (key == "grad-tol") {
      spec.base.grad_tol = parse_double_value(sl, name);
    } else if (key == "out") {
      spec.out_dir = sl.value;
    } else if (key == "jobs") {
      spec.jobs = static_cast<int>(parse_int_value(sl, name));
    } else {
      throw ParseError(name, sl.line_no, 1, "unknown key '" + key + "'");
    }
  }
  if (!methods_seen && spec.methods.empty()) spec.methods = {Method::kVarchen};

  if ((spec.problem.kind == "logistic" || spec.problem.kind == "sigmoid-svm") &&
      spec.problem.dataset_path.empty()) {
    throw ParseError(name, 1, 1, "problem '" + spec.problem.kind + "' requires a dataset");
  }
  for (const Method method : spec.methods) {
    OptimizerConfig config = spec.base;
    config.method = method;
    const auto errors = config.validate();
    if (!errors.empty()) {
      throw ParseError(name, 1, 1,
                       std::string(method_name(method)) + " config invalid: " + errors.front());
    }
  }
  return spec;
}

ExperimentSpec parse_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, 0, "cannot open spec file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_spec_text(buffer.str(), path);
}

std::unique_ptr<FiniteSumProblem> make_problem(const ProblemSpec& spec) {
  if (spec.kind == "synthetic") {
    return std::make_unique<SyntheticIllconditioned>(spec.synthetic_n, spec.synthetic_samples,
                                                     spec.cond, spec.nonconvex_mix,
                                                     spec.problem_seed);
  }
  if (spec.kind == "synthetic-logistic") {
    Dataset data = make_synthetic_classification(spec.synthetic_samples, spec.synthetic_n,
                                                 spec.problem_seed, spec.label_noise);
    return std::make_unique<LogisticRegression>(std::move(data), spec.l2);
  }

  auto load = [&](const std::string& path) {
    const bool libsvm = spec.dataset_format == "libsvm" ||
                        (spec.dataset_format == "auto" && path.size() >= 7 &&
                         path.substr(path.size() - 7) == ".libsvm");
    Dataset data = libsvm ? load_libsvm(path) : load_csv(path);
    if (spec.positive_class != std::numeric_limits<int>::min()) {
      data = binarize(data, spec.positive_class);
    }
    return data;
  };

  Dataset data = load(spec.dataset_path);
  std::optional<Dataset> validation;
  if (!spec.validation_path.empty()) validation = load(spec.validation_path);

  if (spec.kind == "logistic") {
    return std::make_unique<LogisticRegression>(std::move(data), spec.l2, std::move(validation));
  }
  if (spec.kind == "sigmoid-svm") {
    return std::make_unique<SigmoidSvm>(std::move(data), std::move(validation));
  }
  throw InvalidInput("unknown problem kind: " + spec.kind);
}

std::string default_out_dir() {
  if (const char* env = std::getenv("VARCHEN_OUT"); env && *env) return env;
  return "runs";
}

std::vector<RunOutputs> run_experiment(const ExperimentSpec& spec, const CliOverrides& overrides) {
  namespace fs = std::filesystem;
  const std::string out_dir = overrides.out.value_or(spec.out_dir.empty() ? default_out_dir() : spec.out_dir);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + out_dir + "': " + ec.message());

  const std::vector<std::uint64_t> seeds =
      overrides.seed ? std::vector<std::uint64_t>{*overrides.seed} : spec.seeds;
  const int jobs = std::max(1, overrides.jobs.value_or(spec.jobs));

  const std::unique_ptr<FiniteSumProblem> problem = make_problem(spec.problem);
  const std::string git = git_describe();

  struct Task {
    Method method;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const Method method : spec.methods) {
    for (const std::uint64_t seed : seeds) tasks.push_back({method, seed});
  }

  std::vector<RunOutputs> outputs(tasks.size());
  std::atomic<std::size_t> cursor{0};
  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mutex;

  auto worker = [&]() {
    while (true) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= tasks.size() || failed.load()) break;
      const Task& task = tasks[i];
      OptimizerConfig config = spec.base;
      config.method = task.method;
      config.seed = task.seed;

      const auto started = std::chrono::system_clock::now();
      const auto tick = std::chrono::steady_clock::now();
      try {
        const RunTrace trace = run(*problem, config);
        const double wall_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - tick).count();

        const std::string stem = std::string(method_name(task.method)) + "_s" + std::to_string(task.seed);
        RunOutputs& out = outputs[i];
        out.method = task.method;
        out.seed = task.seed;
        out.trace_csv = (fs::path(out_dir) / (stem + "_trace.csv")).string();
        out.epoch_csv = (fs::path(out_dir) / (stem + "_epochs.csv")).string();
        out.manifest = (fs::path(out_dir) / (stem + "_manifest.json")).string();
        out.aborted = trace.aborted;
        out.diagnostic = trace.diagnostic;
        write_trace_csv(out.trace_csv, trace);
        write_epoch_csv(out.epoch_csv, trace);

        nlohmann::json manifest;
        std::string canonical;
        for (const auto& [key, value] : config_items(spec.problem, config)) {
          manifest["config"][key] = value;
          canonical += key + "=" + value + "\n";
        }
        char hash[32];
        std::snprintf(hash, sizeof(hash), "fnv1a:%016llx",
                      static_cast<unsigned long long>(fnv1a64(canonical)));
        manifest["config_hash"] = hash;
        manifest["method"] = method_name(task.method);
        manifest["seed"] = task.seed;
        manifest["git"] = git;
        manifest["started_unix_ms"] =
            std::chrono::duration_cast<std::chrono::milliseconds>(started.time_since_epoch()).count();
        manifest["wall_s"] = wall_s;
        manifest["trace_csv"] = out.trace_csv;
        manifest["epoch_csv"] = out.epoch_csv;
        manifest["aborted"] = trace.aborted;
        manifest["diagnostic"] = trace.diagnostic;
        manifest["cli"] = {{"out", out_dir},
                           {"jobs", jobs},
                           {"seed_override", overrides.seed ? nlohmann::json(*overrides.seed)
                                                            : nlohmann::json(nullptr)}};
        std::ofstream mf(out.manifest, std::ios::trunc);
        if (!mf) throw std::runtime_error("cannot write manifest: " + out.manifest);
        mf << manifest.dump(2) << '\n';
      } catch (const std::exception& e) {
        std::scoped_lock lock(failure_mutex);
        if (!failed.exchange(true)) failure = e.what();
      }
    }
  };

  if (jobs == 1 || tasks.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int count = std::min<int>(jobs, static_cast<int>(tasks.size()));
    pool.reserve(static_cast<std::size_t>(count));
    for (int t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failed.load()) throw std::runtime_error(failure);
  return outputs;
}

std::string help_config_text() {
  return R"(Experiment spec: one `key = value` per line, `#` starts a comment.

Problem selection
  problem            string   logistic | sigmoid-svm | synthetic | synthetic-logistic   [synthetic-logistic]
  dataset            path     LIBSVM or CSV file (required for logistic / sigmoid-svm)
  dataset-format     string   auto | libsvm | csv ('auto' keys off the .libsvm extension) [auto]
  validation-dataset path     optional held-out set for the accuracy column
  l2                 float    L2 regularization weight (logistic)                       [0]
  positive-class     int      one-vs-rest reduction for {0..9} labels                   [off]
  synthetic-n        int      parameter dimension of synthetic problems                 [20]
  synthetic-samples  int      sample count of synthetic problems                        [200]
  cond               float    target condition number (synthetic)                       [1e4]
  nonconvex-mix      float    weight of the sinusoidal terms in [0,1] (synthetic)       [0.3]
  problem-seed       int      generator seed for synthetic problems                     [1]
  label-noise        float    label margin noise (synthetic-logistic)                   [0.05]

Optimizer
  methods            list     varchen, sdlbfgs-vr, svrg, sgd                            [varchen]
  seeds              list     run seeds, one run per (method, seed)                     [1]
  epochs             int      epoch budget                                              [10]
  batch-size         int      minibatch size m                                          [16]
  memory             int      L-BFGS memory p                                           [5]
  eta                float    damping threshold in (0,1)                                [0.25]
  lambda-min         float    admissible lower eigenvalue limit                         [1e-6]
  lambda-max         float    admissible upper eigenvalue limit                         [1e6]
  gamma-lo           float    scaling clamp lower bound                                 [1e-4]
  gamma-hi           float    scaling clamp upper bound                                 [1e4]
  scaling-clamp-mode string   h0-scalar | b0-scalar                                     [h0-scalar]
  lg-mode            string   running-max | per-pair | fixed:<L>                        [running-max]
  curvature-gradient string   raw | corrected                                           [raw]
  schedule           string   constant:<alpha> | harmonic:<c> | power:<beta>            [constant:0.05]
  lipschitz          float    L for schedule constants, or 'auto'                       [1.0]
  sampling           string   without-replacement | with-replacement                    [without-replacement]
  grad-tol           float    early stop on full-gradient norm (0 = off)                [0]

Output
  out                path     output directory                                          [$VARCHEN_OUT or ./runs]
  jobs               int      concurrent runs                                           [1]

Each run writes <method>_s<seed>_trace.csv with header
  k,epoch,minibatch_loss,grad_norm,alpha,lambda_k,Lambda_k,flush,wall_ms
an epoch summary <method>_s<seed>_epochs.csv with header
  epoch,full_loss,full_grad_norm,val_metric
and a <method>_s<seed>_manifest.json run record. All columns except wall_ms
are bit-deterministic for a fixed spec and seed.
)";
}

}  // namespace varchen
