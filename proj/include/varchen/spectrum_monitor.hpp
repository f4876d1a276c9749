#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "varchen/curvature_memory.hpp"
#include "varchen/errors.hpp"
#include "varchen/types.hpp"

namespace varchen {

/// Lipschitz-estimate policy for the bound recursion.
enum class LgMode { kPerPair, kRunningMax, kFixed };

template <typename Scalar>
struct MonitorConfig {
  Scalar lambda_min_limit;  // admissible lower edge for lambda_k
  Scalar lambda_max_limit;  // admissible upper edge for Lambda_k
  LgMode lg_mode = LgMode::kRunningMax;
  Scalar lg_fixed = Scalar(1);  // used when lg_mode == kFixed
};

template <typename Scalar>
struct RecursionStep {
  int h;         // number of updates applied so far
  Scalar lower;  // mu1 after this update
  Scalar upper;  // mu2 after this update
};

/// (lambda_k, Lambda_k) estimates for the current inverse-Hessian operator,
/// plus the per-update recursion trace.
template <typename Scalar>
struct SpectrumBounds {
  Scalar lambda_lo;
  Scalar lambda_hi;
  std::vector<RecursionStep<Scalar>> per_step_trace;
};

/// Eigenvalue bounds for A = mu*V*V^T + rho*s*s^T built from a pair with
/// s.y >= gamma*||s||^2 and ||y|| <= l_y*||s||:
///
///   lower = min(1/l_y, mu / (1 + (mu/gamma)*l_y^2))
///   upper = 1/gamma + max(0, (mu/gamma^2)*l_y^2 - mu / (1 + (mu/gamma)*l_y^2))
///
/// The hypotheses force gamma <= l_y (Cauchy-Schwarz), which this rejects as
/// invalid input; without it the lower/upper ordering can break.
template <typename Scalar>
std::pair<Scalar, Scalar> lemma1_bounds(Scalar gamma, Scalar l_y, Scalar mu) {
  if (!std::isfinite(gamma) || !std::isfinite(l_y) || !std::isfinite(mu) || gamma <= Scalar(0) ||
      l_y <= Scalar(0) || mu <= Scalar(0)) {
    throw InvalidInput("lemma1_bounds: inputs must be finite and positive");
  }
  if (gamma > l_y) {
    throw InvalidInput("lemma1_bounds: gamma > l_y is inconsistent with the pair hypotheses");
  }
  const Scalar l_sq = l_y * l_y;
  const Scalar shrink = mu / (Scalar(1) + (mu / gamma) * l_sq);
  const Scalar lower = std::min(Scalar(1) / l_y, shrink);
  const Scalar upper =
      Scalar(1) / gamma + std::max(Scalar(0), (mu / (gamma * gamma)) * l_sq - shrink);
  return {lower, upper};
}

/// Per-update Lipschitz estimates, one entry per stored pair (oldest first):
/// kPerPair uses each pair's own ||y||/||s||, kRunningMax the max over the
/// stored pairs, kFixed the configured constant.
template <typename Scalar>
std::vector<Scalar> estimate_lg(std::span<const CurvaturePair<Scalar>> pairs,
                                const MonitorConfig<Scalar>& config) {
  std::vector<Scalar> lg(pairs.size());
  switch (config.lg_mode) {
    case LgMode::kPerPair:
      for (std::size_t i = 0; i < pairs.size(); ++i) lg[i] = pairs[i].lg_local;
      break;
    case LgMode::kRunningMax: {
      Scalar max_lg = Scalar(0);
      for (const auto& pair : pairs) max_lg = std::max(max_lg, pair.lg_local);
      std::fill(lg.begin(), lg.end(), max_lg);
      break;
    }
    case LgMode::kFixed:
      std::fill(lg.begin(), lg.end(), config.lg_fixed);
      break;
  }
  return lg;
}

/// Recursive bounds on the extreme eigenvalues of the damped L-BFGS operator
/// built from `pairs` (oldest applied innermost) on top of H0 = tau_now * I.
///
/// Seeds mu1 = mu2 = tau_now. Each update h consumes the pair's frozen
/// damping context: gamma_h = eta / tau_h, l_h = lg_h + 1 / tau_h, then
///
///   mu1' = min(1/l_h, mu1 / (1 + (mu1/gamma_h) l_h^2))
///   mu2' = 1/gamma_h + max(0, (mu2/gamma_h^2) l_h^2
///                             - mu1 / (1 + (mu2/gamma_h) l_h^2))
///
/// The subtracted term in mu2' uses mu1 in the numerator (and mu2 in the
/// denominator), the relaxation that keeps the upper bound recursively
/// computable. Cost is O(p) on stored scalars only.
template <typename Scalar>
SpectrumBounds<Scalar> theorem1_bounds(std::span<const CurvaturePair<Scalar>> pairs, Scalar tau_now,
                                       Scalar eta, const MonitorConfig<Scalar>& config) {
  if (!std::isfinite(tau_now) || tau_now <= Scalar(0) || !(eta > Scalar(0) && eta < Scalar(1))) {
    throw InvalidInput("theorem1_bounds: need tau_now > 0 finite and eta in (0,1)");
  }
  SpectrumBounds<Scalar> bounds{tau_now, tau_now, {}};
  if (pairs.empty()) return bounds;

  const std::vector<Scalar> lg = estimate_lg(pairs, config);
  Scalar mu1 = tau_now;
  Scalar mu2 = tau_now;
  bounds.per_step_trace.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Scalar gamma = eta / pairs[i].tau;
    const Scalar l = lg[i] + Scalar(1) / pairs[i].tau;
    const Scalar l_sq = l * l;
    const Scalar next_mu1 = std::min(Scalar(1) / l, mu1 / (Scalar(1) + (mu1 / gamma) * l_sq));
    const Scalar next_mu2 =
        Scalar(1) / gamma +
        std::max(Scalar(0),
                 (mu2 / (gamma * gamma)) * l_sq - mu1 / (Scalar(1) + (mu2 / gamma) * l_sq));
    mu1 = next_mu1;
    mu2 = next_mu2;
    bounds.per_step_trace.push_back({static_cast<int>(i) + 1, mu1, mu2});
  }
  bounds.lambda_lo = mu1;
  bounds.lambda_hi = mu2;
  return bounds;
}

enum class FlushDecision { kKeep, kFlush };

/// Pure threshold: flush iff Lambda_k > lambda_max_limit or
/// lambda_k < lambda_min_limit.
template <typename Scalar>
FlushDecision check_and_flush(const SpectrumBounds<Scalar>& bounds,
                              const MonitorConfig<Scalar>& config) {
  if (bounds.lambda_hi > config.lambda_max_limit || bounds.lambda_lo < config.lambda_min_limit) {
    return FlushDecision::kFlush;
  }
  return FlushDecision::kKeep;
}

}  // namespace varchen
