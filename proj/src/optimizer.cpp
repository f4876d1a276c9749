#include "varchen/optimizer.hpp"

#include <chrono>
#include <cmath>

#include "varchen/errors.hpp"

namespace varchen {

namespace {

bool uses_memory(Method method) { return method == Method::kVarchen || method == Method::kSdlbfgsVr; }
bool uses_variance_reduction(Method method) { return method != Method::kSgd; }

// SdLBFGS-VR scaling: raw H0 scalar s.y / y.y with a positivity fallback
// (previous tau kept when curvature is non-positive or the ratio is not
// finite).
void unclamped_scaling_update(LbfgsMemory<double>& memory, const Vector<double>& s,
                              const Vector<double>& y) {
  const double raw = s.dot(y) / y.squaredNorm();
  if (std::isfinite(raw) && raw > 0) memory.set_current_tau(raw);
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

std::vector<std::string> OptimizerConfig::validate() const {
  std::vector<std::string> errors;
  if (memory_p < 1) errors.push_back("memory must be >= 1");
  if (!(eta > 0 && eta < 1)) errors.push_back("eta must be in (0,1)");
  if (!(lambda_min > 0 && lambda_min < lambda_max)) {
    errors.push_back("need 0 < lambda-min < lambda-max");
  }
  if (!(gamma_lo > 0 && gamma_lo < gamma_hi)) errors.push_back("need 0 < gamma-lo < gamma-hi");
  if (method == Method::kVarchen &&
      !(lambda_min < gamma_lo && gamma_hi < lambda_max)) {
    errors.push_back("need lambda-min < gamma-lo < gamma-hi < lambda-max");
  }
  if (epochs < 1) errors.push_back("epochs must be >= 1");
  if (batch_size < 1) errors.push_back("batch-size must be >= 1");
  if (lipschitz_L < 0) errors.push_back("lipschitz must be >= 0 (0 = auto)");
  if (lg_mode == LgMode::kFixed && !(lg_fixed > 0)) errors.push_back("fixed lg must be > 0");
  if (grad_tol < 0) errors.push_back("grad-tol must be >= 0");
  switch (schedule) {
    case ScheduleKind::kConstant:
      if (!(schedule_value > 0)) errors.push_back("constant step size must be > 0");
      break;
    case ScheduleKind::kHarmonic:
      if (!(schedule_value > 0)) errors.push_back("harmonic c must be > 0");
      if (lipschitz_L > 0 && schedule_value > lambda_min / (lipschitz_L * lambda_max) * (1 + 1e-12)) {
        errors.push_back("harmonic c exceeds lambda-min / (L * lambda-max)");
      }
      break;
    case ScheduleKind::kPower:
      if (!(schedule_value > 0.5 && schedule_value < 1)) {
        errors.push_back("power beta must be in (0.5, 1)");
      }
      break;
  }
  return errors;
}

double step_size(const StepSchedule& schedule, std::int64_t k) {
  switch (schedule.kind) {
    case ScheduleKind::kConstant:
      return schedule.value;
    case ScheduleKind::kHarmonic:
      return schedule.value / static_cast<double>(k + 1);
    case ScheduleKind::kPower: {
      const double kk = static_cast<double>(k < 1 ? 1 : k);
      return schedule.lambda_min / (schedule.lipschitz * schedule.lambda_max * schedule.lambda_max) *
             std::pow(kk, -schedule.value);
    }
  }
  return schedule.value;
}

GateResult apply_spectrum_gate(LbfgsMemory<double>& memory, const MonitorConfig<double>& monitor,
                               bool flush_enabled) {
  SpectrumBounds<double> bounds = theorem1_bounds<double>(
      std::span<const CurvaturePair<double>>(memory.pairs()), memory.current_tau(), memory.eta(),
      monitor);
  bool flushed = false;
  if (flush_enabled && check_and_flush(bounds, monitor) == FlushDecision::kFlush &&
      memory.size() > 1) {
    memory.flush_to_most_recent();
    bounds = theorem1_bounds<double>(std::span<const CurvaturePair<double>>(memory.pairs()),
                                     memory.current_tau(), memory.eta(), monitor);
    flushed = true;
  }
  return {std::move(bounds), flushed};
}

RunTrace run(const FiniteSumProblem& problem, const OptimizerConfig& config,
             std::optional<Vector<double>> x0) {
  {
    const auto errors = config.validate();
    if (!errors.empty()) throw InvalidInput("invalid optimizer config: " + errors.front());
  }
  const Index n = problem.dimension();
  const Index total = problem.sample_count();
  Vector<double> x = x0.value_or(Vector<double>::Zero(n));
  if (x.size() != n) throw InvalidInput("run: x0 dimension mismatch");

  const bool with_memory = uses_memory(config.method);
  const bool with_vr = uses_variance_reduction(config.method);

  // H_0 = I when the clamp interval admits it; the nearest bound otherwise.
  LbfgsMemory<double> memory(config.memory_p, config.eta, config.gamma_lo, config.gamma_hi,
                             config.clamp_mode);
  const MonitorConfig<double> monitor{config.lambda_min, config.lambda_max, config.lg_mode,
                                      config.lg_fixed};
  BatchSampler sampler(config.seed, total, config.batch_size, config.sampling);

  RunTrace trace;
  auto abort_run = [&](std::int64_t k, const std::string& why) {
    trace.aborted = true;
    trace.diagnostic = "k=" + std::to_string(k) + ": " + why;
  };

  double lg_seen_max = 0.0;  // feeds the auto Lipschitz estimate
  std::int64_t k = 0;

  for (int epoch = 1; epoch <= config.epochs && !trace.aborted; ++epoch) {
    double lipschitz = config.lipschitz_L;
    if (lipschitz <= 0) lipschitz = lg_seen_max > 0 ? lg_seen_max : 1.0;  // frozen per epoch
    const StepSchedule schedule{config.schedule, config.schedule_value, config.lambda_min,
                                config.lambda_max, lipschitz};

    EpochAnchor anchor;
    if (with_vr) {
      anchor = begin_epoch(problem, x);
      if (!anchor.full_grad.allFinite()) {
        abort_run(k, "non-finite full gradient at epoch anchor");
        break;
      }
    }
    sampler.begin_epoch(epoch - 1);
    Index consumed = 0;

    while (consumed < total && !trace.aborted) {
      const auto tick = std::chrono::steady_clock::now();
      const std::vector<Index> batch = sampler.next_batch(total - consumed);

      const Vector<double> grad_x = problem.minibatch_gradient(x, batch);
      Vector<double> grad_anchor;
      Vector<double> g_tilde;
      if (with_vr) {
        grad_anchor = problem.minibatch_gradient(anchor.x_anchor, batch);
        g_tilde = assemble_corrected(grad_x, grad_anchor, anchor.full_grad);
      } else {
        g_tilde = grad_x;
      }

      double lambda_lo = 1.0;
      double lambda_hi = 1.0;
      bool flushed = false;
      if (with_memory) {
        const GateResult gate =
            apply_spectrum_gate(memory, monitor, config.method == Method::kVarchen);
        lambda_lo = gate.bounds.lambda_lo;
        lambda_hi = gate.bounds.lambda_hi;
        flushed = gate.flushed;
      }

      const Vector<double> direction = with_memory ? memory.two_loop_direction(g_tilde) : -g_tilde;
      const double g_norm = g_tilde.norm();
      if (g_norm > 0 && !(g_tilde.dot(direction) < 0)) {
        abort_run(k, "search direction is not a descent direction");
        break;
      }
      const double alpha = step_size(schedule, k);
      const double batch_loss = problem.minibatch_loss(x, batch);
      const Vector<double> x_next = x + alpha * direction;
      if (!std::isfinite(batch_loss) || !std::isfinite(g_norm) || !x_next.allFinite()) {
        abort_run(k, "non-finite loss, gradient, or iterate");
        break;
      }

      if (with_memory) {
        const Vector<double> grad_next = problem.minibatch_gradient(x_next, batch);
        const Vector<double> s = x_next - x;
        Vector<double> y;
        if (config.curvature_gradient == CurvatureGradient::kCorrected && with_vr) {
          y = assemble_corrected(grad_next, grad_anchor, anchor.full_grad) - g_tilde;
        } else {
          y = grad_next - grad_x;
        }
        // reject numerically zero steps instead of damping them
        if (s.norm() >= 1e-12 * std::max(1.0, x.norm()) && y.allFinite()) {
          if (config.method == Method::kVarchen) {
            memory.update_initial_scaling(s, y);
          } else {
            unclamped_scaling_update(memory, s, y);
          }
          memory.push_pair(memory.damp(s, y));
          lg_seen_max = std::max(lg_seen_max, memory.pairs().back().lg_local);
        }
      }

      trace.iterations.push_back(
          {k, epoch, batch_loss, g_norm, alpha, lambda_lo, lambda_hi, flushed, elapsed_ms(tick)});
      x = x_next;
      ++k;
      consumed += static_cast<Index>(batch.size());
    }
    if (trace.aborted) break;

    EpochRecord record;
    record.epoch = epoch;
    record.full_loss = problem.full_loss(x);
    const Vector<double> full_grad = problem.full_gradient(x);
    record.full_grad_norm = full_grad.norm();
    record.val_metric = problem.validation_metric(x);
    trace.epochs.push_back(record);
    if (!std::isfinite(record.full_loss) || !std::isfinite(record.full_grad_norm)) {
      abort_run(k, "non-finite epoch summary");
      break;
    }
    if (config.grad_tol > 0 && record.full_grad_norm < config.grad_tol) break;
  }
  return trace;
}

const char* method_name(Method method) {
  switch (method) {
    case Method::kVarchen:
      return "varchen";
    case Method::kSdlbfgsVr:
      return "sdlbfgs-vr";
    case Method::kSvrg:
      return "svrg";
    case Method::kSgd:
      return "sgd";
  }
  return "unknown";
}

std::optional<Method> method_from_name(const std::string& name) {
  if (name == "varchen") return Method::kVarchen;
  if (name == "sdlbfgs-vr") return Method::kSdlbfgsVr;
  if (name == "svrg") return Method::kSvrg;
  if (name == "sgd") return Method::kSgd;
  return std::nullopt;
}

}  // namespace varchen
