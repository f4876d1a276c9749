#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "varchen/curvature_memory.hpp"
#include "varchen/rng.hpp"
#include "varchen/types.hpp"

// Randomized verification suites cross-checking the fast paths against the
// dense oracle. Shared by the `verify` subcommand, the unit tests, and the
// acceptance suite so all three exercise one generator.

namespace varchen {

struct SuiteResult {
  std::string name;
  int total = 0;
  int failed = 0;
  double seconds = 0.0;
  bool passed() const { return failed == 0; }
};

/// Test fixture: scales the computed bounds before the containment check so
/// a deliberately wrong formula is observable. Identity scales in service.
struct BoundMutation {
  double lower_scale = 1.0;
  double upper_scale = 1.0;
};

/// A valid damped-pair sequence with randomized per-pair seeds tau_i drawn
/// log-uniformly from [gamma_lo, gamma_hi]; tau_now is the newest pair's tau
/// (matching the optimizer's coupling). lg_true_max = max ||y_i||/||s_i||.
struct RandomPairSequence {
  std::vector<CurvaturePair<double>> pairs;
  double tau_now;
  double eta;
  double lg_true_max;
};

RandomPairSequence make_random_sequence(SplitMix64& rng, Index n, Index p, double gamma_lo,
                                        double gamma_hi, double eta);

/// Theorem-style recursion bounds vs dense-oracle spectrum over randomized
/// sequences (n in [2,20], p in [1,8]); fails any instance whose spectrum
/// escapes [lambda_k - 1e-8, Lambda_k + 1e-8].
SuiteResult containment_suite(int instances, std::uint64_t seed, BoundMutation mutation = {});

/// Single-update bounds vs dense spectrum of A = mu V V^T + rho s s^T for
/// both mu = mu1 and mu = mu2 per instance.
SuiteResult lemma_suite(int instances, std::uint64_t seed, BoundMutation mutation = {});

/// Two-loop direction vs -(dense H) g, relative error <= 1e-10.
SuiteResult two_loop_equivalence_suite(int instances, std::uint64_t seed);

/// Analytic gradients of every shipped problem vs central differences.
SuiteResult gradient_check_suite(std::uint64_t seed);

/// Runs all suites, prints per-suite counts, returns 0 iff all pass.
int run_verify(std::ostream& out, bool mutate_bounds = false, std::uint64_t seed = 20240801);

}  // namespace varchen
