#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "varchen/curvature_memory.hpp"
#include "varchen/problems.hpp"
#include "varchen/spectrum_monitor.hpp"
#include "varchen/types.hpp"
#include "varchen/vr_engine.hpp"

namespace varchen {

enum class Method { kVarchen, kSdlbfgsVr, kSvrg, kSgd };

enum class ScheduleKind { kConstant, kHarmonic, kPower };

/// Which gradients feed the curvature difference y_k: raw minibatch
/// gradients (the default) or SVRG-corrected ones. Within an epoch the
/// correction cancels in the difference, so the modes agree analytically.
enum class CurvatureGradient { kRaw, kCorrected };

struct OptimizerConfig {
  Method method = Method::kVarchen;

  Index memory_p = 5;
  double eta = 0.25;
  double lambda_min = 1e-6;
  double lambda_max = 1e6;
  double gamma_lo = 1e-4;
  double gamma_hi = 1e4;
  ScalingClampMode clamp_mode = ScalingClampMode::kH0Scalar;
  LgMode lg_mode = LgMode::kRunningMax;
  double lg_fixed = 1.0;
  CurvatureGradient curvature_gradient = CurvatureGradient::kRaw;

  ScheduleKind schedule = ScheduleKind::kConstant;
  double schedule_value = 0.05;  // alpha (constant), c (harmonic), beta (power)
  double lipschitz_L = 1.0;      // 0 = running-max L_g estimate frozen at epoch starts

  int epochs = 10;
  Index batch_size = 16;
  std::uint64_t seed = 1;
  SamplingMode sampling = SamplingMode::kWithoutReplacementPerEpoch;
  double grad_tol = 0.0;  // > 0 enables early stop on the epoch full-gradient norm

  /// Empty when the config is valid; otherwise one message per violation.
  std::vector<std::string> validate() const;
};

/// Step size at global iteration k (0-based):
///   constant:  alpha
///   harmonic:  c / (k + 1)
///   power:     lambda_min / (L * lambda_max^2) * k^-beta, with the k = 0
///              value defined as the k = 1 value.
struct StepSchedule {
  ScheduleKind kind;
  double value;
  double lambda_min;
  double lambda_max;
  double lipschitz;
};

double step_size(const StepSchedule& schedule, std::int64_t k);

struct IterationRecord {
  std::int64_t k;
  int epoch;
  double minibatch_loss;
  double grad_norm;  // ||g~|| (||g|| for sgd)
  double alpha;
  double lambda_k;
  double lambda_hi_k;
  bool flush;
  double wall_ms;
};

struct EpochRecord {
  int epoch;
  double full_loss;
  double full_grad_norm;
  std::optional<double> val_metric;
};

struct RunTrace {
  std::vector<IterationRecord> iterations;
  std::vector<EpochRecord> epochs;
  bool aborted = false;
  std::string diagnostic;
};

struct GateResult {
  SpectrumBounds<double> bounds;
  bool flushed;
};

/// Algorithm step shared by the run loop and tests: estimate the bounds for
/// the operator about to be applied; when flushing is enabled and the
/// estimates leave the admissible interval, delete all but the most recent
/// pair and recompute, so the returned bounds always describe the operator
/// actually used. `flushed` reports whether pairs were deleted.
GateResult apply_spectrum_gate(LbfgsMemory<double>& memory, const MonitorConfig<double>& monitor,
                               bool flush_enabled);

/// Full optimization run. x0 defaults to the origin. Returns the complete
/// trace; on non-finite values or a lost descent direction the run stops
/// with `aborted` set and a diagnostic instead of throwing.
RunTrace run(const FiniteSumProblem& problem, const OptimizerConfig& config,
             std::optional<Vector<double>> x0 = std::nullopt);

const char* method_name(Method method);
std::optional<Method> method_from_name(const std::string& name);

}  // namespace varchen
