#include "varchen/verify.hpp"

#include <chrono>
#include <cmath>

#include "varchen/dense_oracle.hpp"
#include "varchen/problems.hpp"
#include "varchen/spectrum_monitor.hpp"

namespace varchen {

namespace {

Vector<double> random_vector(SplitMix64& rng, Index n) {
  Vector<double> v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.next_gaussian();
  return v;
}

double log_uniform(SplitMix64& rng, double lo, double hi) {
  return lo * std::pow(hi / lo, rng.next_double());
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace

RandomPairSequence make_random_sequence(SplitMix64& rng, Index n, Index p, double gamma_lo,
                                        double gamma_hi, double eta) {
  RandomPairSequence seq;
  seq.eta = eta;
  seq.lg_true_max = 0.0;
  seq.pairs.reserve(static_cast<std::size_t>(p));
  for (Index i = 0; i < p; ++i) {
    const double tau = log_uniform(rng, gamma_lo, gamma_hi);
    Vector<double> s = random_vector(rng, n);
    s *= (0.5 + 1.5 * rng.next_double()) / s.norm();
    // y mixes a component along s (either sign) with noise so both damping
    // branches are exercised
    const double along = 4.0 * rng.next_double() - 2.0;
    Vector<double> y = along * s + 0.5 * random_vector(rng, n);
    seq.pairs.push_back(damp_pair<double>(s, y, tau, eta));
    seq.lg_true_max = std::max(seq.lg_true_max, seq.pairs.back().lg_local);
  }
  seq.tau_now = seq.pairs.back().tau;
  return seq;
}

SuiteResult containment_suite(int instances, std::uint64_t seed, BoundMutation mutation) {
  Stopwatch watch;
  SuiteResult result{"containment", instances, 0, 0.0};
  SplitMix64 rng(seed);
  for (int trial = 0; trial < instances; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.next_below(19));  // [2, 20]
    const Index p = 1 + static_cast<Index>(rng.next_below(8));   // [1, 8]
    const RandomPairSequence seq = make_random_sequence(rng, n, p, 1e-4, 1e4, 0.25);

    const MonitorConfig<double> config{1e-300, 1e300, LgMode::kFixed, seq.lg_true_max};
    const SpectrumBounds<double> bounds = theorem1_bounds<double>(
        std::span<const CurvaturePair<double>>(seq.pairs), seq.tau_now, seq.eta, config);

    const Matrix<double> dense =
        dense_operator(std::span<const CurvaturePair<double>>(seq.pairs), seq.tau_now, n);
    const Vector<double> eigenvalues = sym_eigenvalues(dense);

    const double lower = bounds.lambda_lo * mutation.lower_scale;
    const double upper = bounds.lambda_hi * mutation.upper_scale;
    if (!(lower - 1e-8 <= eigenvalues(0) && eigenvalues(n - 1) <= upper + 1e-8)) {
      ++result.failed;
    }
  }
  result.seconds = watch.seconds();
  return result;
}

SuiteResult lemma_suite(int instances, std::uint64_t seed, BoundMutation mutation) {
  Stopwatch watch;
  SuiteResult result{"lemma-single-update", instances, 0, 0.0};
  SplitMix64 rng(seed);
  for (int trial = 0; trial < instances; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.next_below(19));
    const RandomPairSequence seq = make_random_sequence(rng, n, 1, 1e-2, 1e2, 0.25);
    const CurvaturePair<double>& pair = seq.pairs.front();

    const double gamma = seq.eta / pair.tau;
    const double l_y = pair.lg_local + 1.0 / pair.tau;
    const double mu1 = log_uniform(rng, 1e-2, 1e2);
    const double mu2 = mu1 * (1.0 + 9.0 * rng.next_double());

    const Index dim = pair.s.size();
    Matrix<double> v = Matrix<double>::Identity(dim, dim);
    v.noalias() -= pair.rho_hat * pair.s * pair.y_hat.transpose();
    for (const double mu : {mu1, mu2}) {
      Matrix<double> a = mu * v * v.transpose();
      a.noalias() += pair.rho_hat * pair.s * pair.s.transpose();
      a = ((a + a.transpose()) / 2.0).eval();
      const Vector<double> eigenvalues = sym_eigenvalues(a);
      const auto [lower, upper] = lemma1_bounds(gamma, l_y, mu);
      if (!(lower * mutation.lower_scale - 1e-8 <= eigenvalues(0) &&
            eigenvalues(dim - 1) <= upper * mutation.upper_scale + 1e-8)) {
        ++result.failed;
        break;
      }
    }
  }
  result.seconds = watch.seconds();
  return result;
}

SuiteResult two_loop_equivalence_suite(int instances, std::uint64_t seed) {
  Stopwatch watch;
  SuiteResult result{"two-loop-vs-dense", instances, 0, 0.0};
  SplitMix64 rng(seed);
  for (int trial = 0; trial < instances; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.next_below(49));  // [2, 50]
    const Index p = 1 + static_cast<Index>(rng.next_below(10));  // [1, 10]
    const RandomPairSequence seq = make_random_sequence(rng, n, p, 1e-2, 1e2, 0.25);

    LbfgsMemory<double> memory(p, seq.eta, 1e-2, 1e2);
    memory.set_current_tau(seq.tau_now);
    for (const auto& pair : seq.pairs) memory.push_pair(pair);

    const Vector<double> g = random_vector(rng, n);
    const Vector<double> fast = memory.two_loop_direction(g);
    const Matrix<double> dense =
        dense_operator(std::span<const CurvaturePair<double>>(seq.pairs), seq.tau_now, n);
    const Vector<double> reference = -(dense * g);
    if ((fast - reference).norm() > 1e-10 * reference.norm()) ++result.failed;
  }
  result.seconds = watch.seconds();
  return result;
}

SuiteResult gradient_check_suite(std::uint64_t seed) {
  Stopwatch watch;
  SuiteResult result{"gradient-checks", 0, 0, 0.0};
  SplitMix64 rng(seed);

  const Dataset classification = make_synthetic_classification(40, 8, rng.next_u64());
  const LogisticRegression logistic(classification, 0.1);
  const SigmoidSvm svm(classification);
  const SyntheticIllconditioned synthetic(6, 30, 100.0, 0.4, rng.next_u64());

  const FiniteSumProblem* problems[] = {&logistic, &svm, &synthetic};
  for (const FiniteSumProblem* problem : problems) {
    for (int point = 0; point < 100; ++point) {
      ++result.total;
      Vector<double> x = random_vector(rng, problem->dimension());
      const Vector<double> analytic = problem->full_gradient(x);
      const double h = 1e-6 * (1.0 + x.norm());
      const Vector<double> numeric = finite_diff_gradient(*problem, x, h);
      const double rel = (numeric - analytic).norm() / std::max(analytic.norm(), 1e-8);
      if (!(rel <= 1e-6)) ++result.failed;
    }
  }
  result.seconds = watch.seconds();
  return result;
}

int run_verify(std::ostream& out, bool mutate_bounds, std::uint64_t seed) {
  // The mutation inflates the lower bound and deflates the upper one past
  // any achievable spectrum, so a healthy containment check must fail:
  // proves the suites can detect a wrong formula.
  const BoundMutation mutation =
      mutate_bounds ? BoundMutation{1e300, 1e-300} : BoundMutation{};

  const SuiteResult suites[] = {
      containment_suite(1000, seed, mutation),
      lemma_suite(1000, seed + 1, mutation),
      two_loop_equivalence_suite(500, seed + 2),
      gradient_check_suite(seed + 3),
  };

  int failed_suites = 0;
  out << "verification sweep: n in [2,20] (dense cross-checks up to 50), p in [1,10]\n";
  for (const SuiteResult& suite : suites) {
    const bool ok = suite.passed();
    failed_suites += ok ? 0 : 1;
    char line[160];
    std::snprintf(line, sizeof(line), "[%s] %-20s %5d checks, %d failed (%.2f s)\n",
                  ok ? "PASS" : "FAIL", suite.name.c_str(), suite.total, suite.failed,
                  suite.seconds);
    out << line;
  }
  return failed_suites == 0 ? 0 : 1;
}

}  // namespace varchen
