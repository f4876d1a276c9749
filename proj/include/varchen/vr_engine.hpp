#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "varchen/problems.hpp"
#include "varchen/rng.hpp"
#include "varchen/types.hpp"

namespace varchen {

/// Epoch snapshot: anchor point, its exact full gradient, and the number of
/// samples consumed since the snapshot.
struct EpochAnchor {
  Vector<double> x_anchor;
  Vector<double> full_grad;
  Index samples_consumed = 0;
};

/// Anchor at x with the exact full gradient; resets the consumed counter.
EpochAnchor begin_epoch(const FiniteSumProblem& problem, const Vector<double>& x);

/// SVRG-corrected gradient g(x,xi) - g(x_anchor,xi) + full_grad over one
/// shared batch xi. Throws InvalidInput on an empty batch.
Vector<double> corrected_gradient(const FiniteSumProblem& problem, const Vector<double>& x,
                                  const EpochAnchor& anchor, std::span<const Index> batch);

/// Correction assembly when the two minibatch gradients are already known.
inline Vector<double> assemble_corrected(const Vector<double>& grad_x,
                                         const Vector<double>& grad_anchor,
                                         const Vector<double>& full_grad) {
  return grad_x - grad_anchor + full_grad;
}

enum class SamplingMode { kWithoutReplacementPerEpoch, kWithReplacement };

/// Deterministic minibatch index source. Each epoch draws from an
/// independent SplitMix64 substream (substream index = epoch), so the whole
/// batch sequence is a pure function of (seed, epoch). Without-replacement
/// mode shuffles a permutation per epoch and emits consecutive slices; the
/// last slice of an epoch is truncated. Emitted sizes never exceed the
/// remaining-budget cap.
class BatchSampler {
 public:
  BatchSampler(std::uint64_t seed, Index n_samples, Index batch_size, SamplingMode mode);

  void begin_epoch(int epoch_index);
  std::vector<Index> next_batch(Index remaining_cap);

  Index batch_size() const { return batch_size_; }
  SamplingMode mode() const { return mode_; }

 private:
  std::uint64_t seed_;
  Index n_samples_;
  Index batch_size_;
  SamplingMode mode_;
  SplitMix64 stream_;
  std::vector<Index> permutation_;
  Index position_ = 0;
};

}  // namespace varchen
