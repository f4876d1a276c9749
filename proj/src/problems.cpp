#include "varchen/problems.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "varchen/dense_oracle.hpp"
#include "varchen/errors.hpp"
#include "varchen/rng.hpp"

namespace varchen {

namespace {

// log(1 + exp(t)) without overflow
double log1pexp(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

// 1 / (1 + exp(-t)) evaluated from the bounded side
double sigmoid(double t) {
  if (t >= 0) {
    return 1.0 / (1.0 + std::exp(-t));
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double sign_accuracy(const Dataset& data, const Vector<double>& x) {
  Index hits = 0;
  for (Index i = 0; i < data.rows(); ++i) {
    const double margin = static_cast<double>(data.labels(i)) * data.row_dot(i, x);
    if (margin > 0) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.rows());
}

void require_binary_labels(const Dataset& data) {
  for (Index i = 0; i < data.labels.size(); ++i) {
    if (data.labels(i) != 1 && data.labels(i) != -1) {
      throw InvalidInput("labels must be in {-1,+1}; use binarize() for multiclass data");
    }
  }
}

}  // namespace

double FiniteSumProblem::full_loss(const Vector<double>& x) const {
  double acc = 0;
  const Index n = sample_count();
  for (Index i = 0; i < n; ++i) acc += sample_loss(i, x);
  return acc / static_cast<double>(n);
}

Vector<double> FiniteSumProblem::full_gradient(const Vector<double>& x) const {
  Vector<double> grad = Vector<double>::Zero(dimension());
  const Index n = sample_count();
  for (Index i = 0; i < n; ++i) add_sample_gradient(i, x, grad);
  return grad / static_cast<double>(n);
}

double FiniteSumProblem::minibatch_loss(const Vector<double>& x,
                                        std::span<const Index> batch) const {
  if (batch.empty()) throw InvalidInput("minibatch_loss: empty batch");
  double acc = 0;
  for (const Index i : batch) acc += sample_loss(i, x);
  return acc / static_cast<double>(batch.size());
}

Vector<double> FiniteSumProblem::minibatch_gradient(const Vector<double>& x,
                                                    std::span<const Index> batch) const {
  if (batch.empty()) throw InvalidInput("minibatch_gradient: empty batch");
  Vector<double> grad = Vector<double>::Zero(dimension());
  for (const Index i : batch) add_sample_gradient(i, x, grad);
  return grad / static_cast<double>(batch.size());
}

LogisticRegression::LogisticRegression(Dataset data, double l2, std::optional<Dataset> validation)
    : data_(std::move(data)), l2_(l2), validation_(std::move(validation)) {
  data_.validate();
  require_binary_labels(data_);
  if (validation_) {
    validation_->validate();
    require_binary_labels(*validation_);
  }
  if (l2_ < 0) throw InvalidInput("logistic_regression: l2 must be nonnegative");
}

double LogisticRegression::sample_loss(Index i, const Vector<double>& x) const {
  const double margin = static_cast<double>(data_.labels(i)) * data_.row_dot(i, x);
  return log1pexp(-margin) + 0.5 * l2_ * x.squaredNorm();
}

void LogisticRegression::add_sample_gradient(Index i, const Vector<double>& x,
                                             Vector<double>& out) const {
  const double b = static_cast<double>(data_.labels(i));
  const double margin = b * data_.row_dot(i, x);
  data_.row_axpy(i, -b * sigmoid(-margin), out);
  if (l2_ > 0) out.noalias() += l2_ * x;
}

std::optional<double> LogisticRegression::validation_metric(const Vector<double>& x) const {
  if (!validation_) return std::nullopt;
  return sign_accuracy(*validation_, x);
}

std::optional<double> LogisticRegression::lipschitz_bound() const {
  // lambda_max((1/4N) sum a_i a_i^T) + l2, exact at oracle scale
  if (lipschitz_cache_) return lipschitz_cache_;
  if (data_.cols() > kDenseOracleMaxDim) return std::nullopt;
  Matrix<double> gram = Matrix<double>::Zero(data_.cols(), data_.cols());
  for (Index i = 0; i < data_.rows(); ++i) data_.add_row_outer(i, gram);
  gram = ((gram + gram.transpose()) / 2.0).eval();
  const Vector<double> eigs = sym_eigenvalues(gram);
  lipschitz_cache_ = eigs(eigs.size() - 1) / (4.0 * static_cast<double>(data_.rows())) + l2_;
  return lipschitz_cache_;
}

SigmoidSvm::SigmoidSvm(Dataset data, std::optional<Dataset> validation)
    : data_(std::move(data)), validation_(std::move(validation)) {
  data_.validate();
  require_binary_labels(data_);
  if (validation_) {
    validation_->validate();
    require_binary_labels(*validation_);
  }
}

double SigmoidSvm::sample_loss(Index i, const Vector<double>& x) const {
  const double margin = static_cast<double>(data_.labels(i)) * data_.row_dot(i, x);
  return 1.0 - std::tanh(margin);
}

void SigmoidSvm::add_sample_gradient(Index i, const Vector<double>& x, Vector<double>& out) const {
  const double b = static_cast<double>(data_.labels(i));
  const double t = std::tanh(b * data_.row_dot(i, x));
  data_.row_axpy(i, -b * (1.0 - t * t), out);
}

std::optional<double> SigmoidSvm::validation_metric(const Vector<double>& x) const {
  if (!validation_) return std::nullopt;
  return sign_accuracy(*validation_, x);
}

SyntheticIllconditioned::SyntheticIllconditioned(Index n, Index samples, double cond,
                                                 double nonconvex_mix, std::uint64_t seed)
    : mix_(nonconvex_mix) {
  if (n < 2) throw InvalidInput("synthetic_illconditioned: n must be >= 2");
  if (cond < 1) throw InvalidInput("synthetic_illconditioned: cond must be >= 1");
  if (nonconvex_mix < 0 || nonconvex_mix > 1) {
    throw InvalidInput("synthetic_illconditioned: nonconvex_mix must be in [0,1]");
  }
  SplitMix64 root(seed);
  SplitMix64 rot = root.substream(1);
  SplitMix64 cen = root.substream(2);
  SplitMix64 wav = root.substream(3);
  SplitMix64 pha = root.substream(4);

  Matrix<double> gauss(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) gauss(i, j) = rot.next_gaussian();
  const Matrix<double> q = Eigen::HouseholderQR<Matrix<double>>(gauss).householderQ();

  // spectrum log-spaced in [1, cond]
  Vector<double> spectrum(n);
  for (Index i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    spectrum(i) = std::pow(cond, t);
  }
  quadratic_ = q.transpose() * spectrum.asDiagonal() * q;
  quadratic_ = ((quadratic_ + quadratic_.transpose()) / 2.0).eval();

  centers_.resize(n, samples);
  waves_.resize(n, samples);
  phases_.resize(samples);
  for (Index j = 0; j < samples; ++j) {
    for (Index i = 0; i < n; ++i) centers_(i, j) = 0.5 * cen.next_gaussian();
    Vector<double> w(n);
    for (Index i = 0; i < n; ++i) w(i) = wav.next_gaussian();
    waves_.col(j) = w / w.norm();
    phases_(j) = 2.0 * std::numbers::pi * pha.next_double();
  }

  // ||hess f_i|| <= (1-mix) lambda_max(A) + mix ||w_i w_i^T||; the mean-of-
  // waves term is computed exactly while n is within the oracle cap.
  double wave_term = 1.0;
  if (mix_ > 0 && n <= kDenseOracleMaxDim) {
    Matrix<double> mean_outer = Matrix<double>::Zero(n, n);
    for (Index j = 0; j < samples; ++j) {
      mean_outer.noalias() += waves_.col(j) * waves_.col(j).transpose();
    }
    mean_outer /= static_cast<double>(samples);
    mean_outer = ((mean_outer + mean_outer.transpose()) / 2.0).eval();
    const Vector<double> eigs = sym_eigenvalues(mean_outer);
    wave_term = eigs(eigs.size() - 1);
  }
  lipschitz_ = (1.0 - mix_) * cond + mix_ * wave_term;
}

double SyntheticIllconditioned::sample_loss(Index i, const Vector<double>& x) const {
  const Vector<double> d = x - centers_.col(i);
  double loss = 0.5 * (1.0 - mix_) * d.dot(quadratic_ * d);
  if (mix_ > 0) loss += mix_ * std::sin(waves_.col(i).dot(x) + phases_(i));
  return loss;
}

void SyntheticIllconditioned::add_sample_gradient(Index i, const Vector<double>& x,
                                                  Vector<double>& out) const {
  const Vector<double> d = x - centers_.col(i);
  out.noalias() += (1.0 - mix_) * (quadratic_ * d);
  if (mix_ > 0) {
    out.noalias() += mix_ * std::cos(waves_.col(i).dot(x) + phases_(i)) * waves_.col(i);
  }
}

Dataset make_synthetic_classification(Index samples, Index n, std::uint64_t seed,
                                      double label_noise) {
  SplitMix64 root(seed);
  SplitMix64 feat = root.substream(1);
  SplitMix64 dir = root.substream(2);
  SplitMix64 noise = root.substream(3);

  Vector<double> w(n);
  for (Index i = 0; i < n; ++i) w(i) = dir.next_gaussian();
  w /= w.norm();

  Dataset out;
  out.provenance = "synthetic-classification(seed=" + std::to_string(seed) + ")";
  out.dense.resize(samples, n);
  out.labels.resize(samples);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (Index i = 0; i < samples; ++i) {
    for (Index j = 0; j < n; ++j) out.dense(i, j) = scale * feat.next_gaussian();
    const double margin = out.dense.row(i).dot(w) + label_noise * noise.next_gaussian();
    out.labels(i) = margin >= 0 ? 1 : -1;
  }
  return out;
}

}  // namespace varchen
