#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "varchen/curvature_memory.hpp"
#include "varchen/errors.hpp"
#include "varchen/types.hpp"

// Brute-force verification path: explicit dense operators, a self-contained
// symmetric eigensolver, and finite-difference gradients. Used by tests and
// the `verify` subcommand, never inside the optimization loop. Capped at
// small n by design.

namespace varchen {

inline constexpr Index kDenseOracleMaxDim = 200;

namespace detail {

template <typename Scalar>
void require_symmetric(const Matrix<Scalar>& h) {
  if (h.rows() != h.cols()) throw InvalidInput("dense oracle: matrix not square");
  const Scalar scale = std::max(Scalar(1), h.cwiseAbs().maxCoeff());
  const Scalar asym = (h - h.transpose()).cwiseAbs().maxCoeff();
  if (asym > Scalar(1e-12) * scale) throw InvalidInput("dense oracle: matrix not symmetric");
}

}  // namespace detail

/// One damped BFGS update in dense form: V H V^T + rho * s s^T with
/// V = I - rho * s * y_hat^T. Result is symmetrized so downstream symmetry
/// checks are exact.
template <typename Scalar>
Matrix<Scalar> dense_damped_update(const Matrix<Scalar>& h, const CurvaturePair<Scalar>& pair) {
  detail::require_symmetric(h);
  if (h.rows() != pair.s.size()) throw InvalidInput("dense_damped_update: dimension mismatch");
  const Index n = h.rows();
  Matrix<Scalar> v = Matrix<Scalar>::Identity(n, n);
  v.noalias() -= pair.rho_hat * pair.s * pair.y_hat.transpose();
  Matrix<Scalar> out = v * h * v.transpose();
  out.noalias() += pair.rho_hat * pair.s * pair.s.transpose();
  return ((out + out.transpose()) / Scalar(2)).eval();
}

/// Dense reconstruction of the damped L-BFGS operator: start from
/// tau_now * I and apply the stored pairs oldest first.
template <typename Scalar>
Matrix<Scalar> dense_operator(std::span<const CurvaturePair<Scalar>> pairs, Scalar tau_now,
                              Index n) {
  if (n > kDenseOracleMaxDim) throw InvalidInput("dense_operator: dimension above oracle cap");
  Matrix<Scalar> h = tau_now * Matrix<Scalar>::Identity(n, n);
  for (const auto& pair : pairs) {
    h = dense_damped_update(h, pair);
  }
  return h;
}

template <typename Scalar>
struct SymEigenResult {
  Vector<Scalar> values;   // ascending
  Matrix<Scalar> vectors;  // columns match values
  int sweeps;
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix, iterated until
/// the off-diagonal Frobenius norm drops below 1e-12 * ||H||_F.
template <typename Scalar>
SymEigenResult<Scalar> sym_eigen(Matrix<Scalar> a) {
  detail::require_symmetric(a);
  const Index n = a.rows();
  if (n > kDenseOracleMaxDim) throw InvalidInput("sym_eigen: dimension above oracle cap");
  Matrix<Scalar> v = Matrix<Scalar>::Identity(n, n);
  const Scalar fnorm = a.norm();
  const Scalar tol = Scalar(1e-12) * fnorm;

  auto off_norm = [&]() {
    Scalar sum = Scalar(0);
    for (Index p = 0; p < n; ++p)
      for (Index q = p + 1; q < n; ++q) sum += a(p, q) * a(p, q);
    return std::sqrt(Scalar(2) * sum);
  };

  int sweep = 0;
  constexpr int kMaxSweeps = 64;
  while (fnorm > Scalar(0) && off_norm() > tol && sweep < kMaxSweeps) {
    ++sweep;
    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (apq == Scalar(0)) continue;
        const Scalar diff = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
        // smaller-magnitude root of t^2 + 2*diff*t - 1 = 0
        const Scalar t = (diff >= Scalar(0))
                             ? Scalar(1) / (diff + std::sqrt(Scalar(1) + diff * diff))
                             : Scalar(1) / (diff - std::sqrt(Scalar(1) + diff * diff));
        const Scalar c = Scalar(1) / std::sqrt(Scalar(1) + t * t);
        const Scalar s = t * c;
        const Scalar app = a(p, p);
        const Scalar aqq = a(q, q);
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = Scalar(0);
        a(q, p) = Scalar(0);
        for (Index i = 0; i < n; ++i) {
          if (i == p || i == q) continue;
          const Scalar aip = a(i, p);
          const Scalar aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(p, i) = a(i, p);
          a(i, q) = s * aip + c * aiq;
          a(q, i) = a(i, q);
        }
        for (Index i = 0; i < n; ++i) {
          const Scalar vip = v(i, p);
          const Scalar viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index(0));
  std::sort(order.begin(), order.end(), [&](Index i, Index j) { return a(i, i) < a(j, j); });
  SymEigenResult<Scalar> out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Index k = 0; k < n; ++k) {
    out.values(k) = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
    out.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  out.sweeps = sweep;
  return out;
}

/// Eigenvalues only, ascending.
template <typename Scalar>
Vector<Scalar> sym_eigenvalues(const Matrix<Scalar>& h) {
  return sym_eigen(h).values;
}

/// Central finite differences per coordinate; `problem` needs full_loss(x).
template <typename Problem, typename Scalar>
Vector<Scalar> finite_diff_gradient(const Problem& problem, Vector<Scalar> x, Scalar h) {
  if (!(h > Scalar(0))) throw InvalidInput("finite_diff_gradient: h must be positive");
  Vector<Scalar> grad(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const Scalar xi = x(i);
    x(i) = xi + h;
    const Scalar fp = problem.full_loss(x);
    x(i) = xi - h;
    const Scalar fm = problem.full_loss(x);
    x(i) = xi;
    grad(i) = (fp - fm) / (Scalar(2) * h);
  }
  return grad;
}

}  // namespace varchen
