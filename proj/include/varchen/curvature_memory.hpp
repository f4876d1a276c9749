#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "varchen/errors.hpp"
#include "varchen/types.hpp"

namespace varchen {

/// One damped curvature record.
///
/// `tau` is the scalar of the diagonal seed matrix H0 = tau*I that was in
/// effect when the pair was damped; it stays frozen for the pair's lifetime
/// so the eigenvalue-bound recursion can replay the exact damping context.
/// `lg_local` is the per-pair Lipschitz estimate ||y|| / ||s||.
template <typename Scalar>
struct CurvaturePair {
  Vector<Scalar> s;      // iterate displacement
  Vector<Scalar> y;      // raw gradient difference
  Vector<Scalar> y_hat;  // damped gradient difference
  Scalar rho_hat;        // 1 / (s . y_hat)
  Scalar theta;          // damping coefficient in (0, 1]
  Scalar tau;            // H0 scalar at damping time
  Scalar lg_local;       // ||y|| / ||s||
};

/// Powell-style damping coefficient for seed matrix B0 = tau^-1 * I:
/// returns 1 when s.y >= eta * ||s||^2 / tau, and otherwise
/// (1 - eta) * sB0s / (sB0s - s.y), which lies in (0, 1).
template <typename Scalar, typename DS, typename DY>
Scalar compute_theta(const Eigen::MatrixBase<DS>& s, const Eigen::MatrixBase<DY>& y, Scalar tau,
                     Scalar eta) {
  if (!s.allFinite() || !y.allFinite() || !std::isfinite(tau) || tau <= Scalar(0) ||
      !(eta > Scalar(0) && eta < Scalar(1))) {
    throw InvalidInput("compute_theta: inputs must be finite, tau > 0, eta in (0,1)");
  }
  const Scalar s_sq = s.squaredNorm();
  if (s_sq == Scalar(0)) {
    throw DegenerateStep("compute_theta: ||s|| = 0");
  }
  const Scalar s_b0_s = s_sq / tau;
  const Scalar sy = s.dot(y);
  if (sy >= eta * s_b0_s) {
    return Scalar(1);
  }
  return (Scalar(1) - eta) * s_b0_s / (s_b0_s - sy);
}

/// Damped pair: y_hat = theta*y + (1-theta)*tau^-1*s. Guarantees the
/// curvature condition s . y_hat >= eta * ||s||^2 / tau > 0 regardless of
/// the sign of s . y. When theta == 1, y_hat is y unmodified (bitwise).
template <typename Scalar, typename DS, typename DY>
CurvaturePair<Scalar> damp_pair(const Eigen::MatrixBase<DS>& s, const Eigen::MatrixBase<DY>& y,
                                Scalar tau, Scalar eta) {
  const Scalar theta = compute_theta(s, y, tau, eta);
  CurvaturePair<Scalar> pair;
  pair.s = s;
  pair.y = y;
  if (theta == Scalar(1)) {
    pair.y_hat = y;
  } else {
    pair.y_hat = theta * y + ((Scalar(1) - theta) / tau) * s;
  }
  pair.theta = theta;
  pair.tau = tau;
  pair.rho_hat = Scalar(1) / pair.s.dot(pair.y_hat);
  pair.lg_local = pair.y.norm() / pair.s.norm();
  return pair;
}

/// Clamp a raw scaling ratio into [lo, hi]. Degenerate raw values are
/// absorbed: NaN and non-positive values map to lo, +inf to hi.
template <typename Scalar>
Scalar clamp_scaling(Scalar raw, Scalar lo, Scalar hi) {
  if (std::isnan(raw) || raw <= Scalar(0)) return lo;
  if (raw > hi) return hi;
  if (raw < lo) return lo;
  return raw;
}

/// Which scalar of the diagonal seed matrix the clamp applies to.
/// kH0Scalar (default): tau = clamp(s.y / y.y), the H0 scalar itself.
/// kB0Scalar: the B0-side ratio gamma = y.y / s.y is clamped, then inverted
/// (an outer clamp keeps tau inside [lo, hi] for asymmetric bounds).
enum class ScalingClampMode { kH0Scalar, kB0Scalar };

/// Bounded deque of damped curvature pairs plus the current H0 = tau*I
/// scalar; owns search-direction computation via the two-loop recursion.
template <typename Scalar>
class LbfgsMemory {
 public:
  LbfgsMemory(Index memory_p, Scalar eta, Scalar gamma_lo, Scalar gamma_hi,
              ScalingClampMode clamp_mode = ScalingClampMode::kH0Scalar)
      : memory_p_(memory_p),
        eta_(eta),
        gamma_lo_(gamma_lo),
        gamma_hi_(gamma_hi),
        clamp_mode_(clamp_mode),
        current_tau_(clamp_scaling(Scalar(1), gamma_lo, gamma_hi)) {
    if (memory_p < 1) throw InvalidInput("LbfgsMemory: memory_p must be >= 1");
    if (!(eta > Scalar(0) && eta < Scalar(1))) throw InvalidInput("LbfgsMemory: eta must be in (0,1)");
    if (!(Scalar(0) < gamma_lo && gamma_lo < gamma_hi)) {
      throw InvalidInput("LbfgsMemory: need 0 < gamma_lo < gamma_hi");
    }
  }

  Index memory_p() const { return memory_p_; }
  Scalar eta() const { return eta_; }
  Scalar gamma_lo() const { return gamma_lo_; }
  Scalar gamma_hi() const { return gamma_hi_; }
  Scalar current_tau() const { return current_tau_; }
  Index size() const { return static_cast<Index>(pairs_.size()); }
  bool empty() const { return pairs_.empty(); }
  const std::vector<CurvaturePair<Scalar>>& pairs() const { return pairs_; }

  /// Raw escape hatch for seeds outside the clamp (H0 = I at start) and for
  /// baselines that deliberately run unclamped. Must stay positive.
  void set_current_tau(Scalar tau) {
    if (!std::isfinite(tau) || tau <= Scalar(0)) {
      throw InvalidInput("set_current_tau: tau must be finite and > 0");
    }
    current_tau_ = tau;
  }

  /// Clamped scaling update from the newest (s, y). Returns the clamped
  /// B0-side ratio clamp(y.y / s.y) in [gamma_lo, gamma_hi]; the stored H0
  /// scalar is derived from the same data per the clamp mode.
  template <typename DS, typename DY>
  Scalar update_initial_scaling(const Eigen::MatrixBase<DS>& s, const Eigen::MatrixBase<DY>& y) {
    const Scalar sy = s.dot(y);
    const Scalar yy = y.squaredNorm();
    const Scalar gamma_clamped = clamp_scaling(yy / sy, gamma_lo_, gamma_hi_);
    if (clamp_mode_ == ScalingClampMode::kH0Scalar) {
      current_tau_ = clamp_scaling(sy / yy, gamma_lo_, gamma_hi_);
    } else {
      current_tau_ = clamp_scaling(Scalar(1) / gamma_clamped, gamma_lo_, gamma_hi_);
    }
    return gamma_clamped;
  }

  /// Damp (s, y) against the current H0 scalar.
  template <typename DS, typename DY>
  CurvaturePair<Scalar> damp(const Eigen::MatrixBase<DS>& s, const Eigen::MatrixBase<DY>& y) const {
    return damp_pair(s, y, current_tau_, eta_);
  }

  /// Append, evicting the oldest pair beyond capacity. Validates the stored
  /// invariants (finiteness, positive rho_hat, curvature condition).
  void push_pair(CurvaturePair<Scalar> pair) {
    validate_pair(pair);
    if (static_cast<Index>(pairs_.size()) == memory_p_) {
      pairs_.erase(pairs_.begin());
    }
    pairs_.push_back(std::move(pair));
  }

  /// Delete all stored pairs except the single most recent one. No-op when
  /// the memory holds at most one pair.
  void flush_to_most_recent() {
    if (pairs_.size() > 1) {
      pairs_.erase(pairs_.begin(), pairs_.end() - 1);
    }
  }

  /// d = -H g for the damped L-BFGS operator defined by the stored pairs
  /// (oldest innermost) and H0 = current_tau * I. Empty memory: -tau * g.
  Vector<Scalar> two_loop_direction(const Vector<Scalar>& g) const {
    if (!g.allFinite()) throw InvalidInput("two_loop_direction: non-finite gradient");
    const int m = static_cast<int>(pairs_.size());
    Vector<Scalar> q = g;
    std::vector<Scalar> alpha(m);
    for (int i = m - 1; i >= 0; --i) {
      alpha[i] = pairs_[i].rho_hat * pairs_[i].s.dot(q);
      q.noalias() -= alpha[i] * pairs_[i].y_hat;
    }
    Vector<Scalar> r = current_tau_ * q;
    for (int i = 0; i < m; ++i) {
      const Scalar beta = pairs_[i].rho_hat * pairs_[i].y_hat.dot(r);
      r.noalias() += (alpha[i] - beta) * pairs_[i].s;
    }
    return -r;
  }

 private:
  void validate_pair(const CurvaturePair<Scalar>& pair) const {
    if (!pair.s.allFinite() || !pair.y.allFinite() || !pair.y_hat.allFinite() ||
        !std::isfinite(pair.rho_hat) || !std::isfinite(pair.tau) || pair.tau <= Scalar(0)) {
      throw InvalidInput("push_pair: non-finite pair");
    }
    const Scalar s_sq = pair.s.squaredNorm();
    if (s_sq == Scalar(0)) throw DegenerateStep("push_pair: ||s|| = 0");
    if (!(pair.rho_hat > Scalar(0))) throw InvalidInput("push_pair: rho_hat must be positive");
    if (!(pair.theta > Scalar(0) && pair.theta <= Scalar(1))) {
      throw InvalidInput("push_pair: theta outside (0,1]");
    }
    const Scalar sy_hat = pair.s.dot(pair.y_hat);
    if (sy_hat < eta_ * s_sq / pair.tau - Scalar(1e-12)) {
      throw InvalidInput("push_pair: curvature condition violated");
    }
  }

  std::vector<CurvaturePair<Scalar>> pairs_;
  Index memory_p_;
  Scalar eta_;
  Scalar gamma_lo_;
  Scalar gamma_hi_;
  ScalingClampMode clamp_mode_;
  Scalar current_tau_;
};

}  // namespace varchen
