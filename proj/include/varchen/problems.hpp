#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "varchen/dataset_io.hpp"
#include "varchen/types.hpp"

namespace varchen {

/// Differentiable finite-sum objective f(x) = (1/N) sum_i f_i(x) with
/// per-sample losses and gradients. All reductions are sequential in sample
/// order so repeated evaluations are bitwise identical. Implementations are
/// immutable after construction; per-sample evaluation is pure.
class FiniteSumProblem {
 public:
  virtual ~FiniteSumProblem() = default;

  virtual Index dimension() const = 0;
  virtual Index sample_count() const = 0;
  virtual double sample_loss(Index i, const Vector<double>& x) const = 0;
  /// out += grad f_i(x)
  virtual void add_sample_gradient(Index i, const Vector<double>& x, Vector<double>& out) const = 0;

  /// Held-out classification accuracy, when the problem carries one.
  virtual std::optional<double> validation_metric(const Vector<double>& /*x*/) const {
    return std::nullopt;
  }
  /// Analytic bound on the gradient Lipschitz constant, when available.
  virtual std::optional<double> lipschitz_bound() const { return std::nullopt; }
  /// A constant below every achievable loss value.
  virtual double loss_lower_bound() const { return 0.0; }

  double full_loss(const Vector<double>& x) const;
  Vector<double> full_gradient(const Vector<double>& x) const;
  double minibatch_loss(const Vector<double>& x, std::span<const Index> batch) const;
  Vector<double> minibatch_gradient(const Vector<double>& x, std::span<const Index> batch) const;
};

/// f_i(x) = log(1 + exp(-b_i a_i.x)) + (l2/2)||x||^2. Labels must be +-1.
class LogisticRegression final : public FiniteSumProblem {
 public:
  LogisticRegression(Dataset data, double l2, std::optional<Dataset> validation = std::nullopt);

  Index dimension() const override { return data_.cols(); }
  Index sample_count() const override { return data_.rows(); }
  double sample_loss(Index i, const Vector<double>& x) const override;
  void add_sample_gradient(Index i, const Vector<double>& x, Vector<double>& out) const override;
  std::optional<double> validation_metric(const Vector<double>& x) const override;
  std::optional<double> lipschitz_bound() const override;

 private:
  Dataset data_;
  double l2_;
  std::optional<Dataset> validation_;
  mutable std::optional<double> lipschitz_cache_;
};

/// Nonconvex SVM with sigmoid loss: f_i(x) = 1 - tanh(b_i a_i.x).
class SigmoidSvm final : public FiniteSumProblem {
 public:
  explicit SigmoidSvm(Dataset data, std::optional<Dataset> validation = std::nullopt);

  Index dimension() const override { return data_.cols(); }
  Index sample_count() const override { return data_.rows(); }
  double sample_loss(Index i, const Vector<double>& x) const override;
  void add_sample_gradient(Index i, const Vector<double>& x, Vector<double>& out) const override;
  std::optional<double> validation_metric(const Vector<double>& x) const override;

 private:
  Dataset data_;
  std::optional<Dataset> validation_;
};

/// Ill-conditioned nonconvex stress problem:
///
///   f_i(x) = (1-mix)/2 (x-c_i)^T A (x-c_i) + mix * sin(w_i.x + phi_i)
///
/// with A = Q^T D Q sharing one random rotation and spectrum [1, cond], unit
/// w_i, and seeded centers/phases. The gradient Lipschitz constant is
/// analytically bounded and reported, and the loss is bounded below by -mix.
class SyntheticIllconditioned final : public FiniteSumProblem {
 public:
  SyntheticIllconditioned(Index n, Index samples, double cond, double nonconvex_mix,
                          std::uint64_t seed);

  Index dimension() const override { return quadratic_.rows(); }
  Index sample_count() const override { return centers_.cols(); }
  double sample_loss(Index i, const Vector<double>& x) const override;
  void add_sample_gradient(Index i, const Vector<double>& x, Vector<double>& out) const override;
  std::optional<double> lipschitz_bound() const override { return lipschitz_; }
  double loss_lower_bound() const override { return -mix_; }

  /// Exact minimizer when nonconvex_mix == 0 (mean of the centers).
  Vector<double> quadratic_minimizer() const { return centers_.rowwise().mean(); }
  const Matrix<double>& quadratic_matrix() const { return quadratic_; }

 private:
  Matrix<double> quadratic_;  // shared A = Q^T D Q
  Matrix<double> centers_;    // n x N
  Matrix<double> waves_;      // n x N unit directions
  Vector<double> phases_;
  double mix_;
  double lipschitz_;
};

/// Seeded two-class dataset for desk-scale logistic experiments: rows
/// a_i ~ N(0, I/n), labels sign(a_i . w + noise * g_i).
Dataset make_synthetic_classification(Index samples, Index n, std::uint64_t seed,
                                      double label_noise = 0.05);

}  // namespace varchen
