#include "varchen/vr_engine.hpp"

#include <algorithm>
#include <numeric>

#include "varchen/errors.hpp"

namespace varchen {

EpochAnchor begin_epoch(const FiniteSumProblem& problem, const Vector<double>& x) {
  if (!x.allFinite()) throw InvalidInput("begin_epoch: non-finite anchor point");
  EpochAnchor anchor;
  anchor.x_anchor = x;
  anchor.full_grad = problem.full_gradient(x);
  anchor.samples_consumed = 0;
  return anchor;
}

Vector<double> corrected_gradient(const FiniteSumProblem& problem, const Vector<double>& x,
                                  const EpochAnchor& anchor, std::span<const Index> batch) {
  if (batch.empty()) throw InvalidInput("corrected_gradient: empty batch");
  const Vector<double> grad_x = problem.minibatch_gradient(x, batch);
  const Vector<double> grad_anchor = problem.minibatch_gradient(anchor.x_anchor, batch);
  return assemble_corrected(grad_x, grad_anchor, anchor.full_grad);
}

BatchSampler::BatchSampler(std::uint64_t seed, Index n_samples, Index batch_size,
                           SamplingMode mode)
    : seed_(seed), n_samples_(n_samples), batch_size_(batch_size), mode_(mode), stream_(seed) {
  if (n_samples < 1) throw InvalidInput("BatchSampler: need at least one sample");
  if (batch_size < 1) throw InvalidInput("BatchSampler: batch size must be >= 1");
  begin_epoch(0);
}

void BatchSampler::begin_epoch(int epoch_index) {
  stream_ = SplitMix64(SplitMix64::at(seed_, static_cast<std::uint64_t>(epoch_index)));
  if (mode_ == SamplingMode::kWithoutReplacementPerEpoch) {
    permutation_.resize(static_cast<std::size_t>(n_samples_));
    std::iota(permutation_.begin(), permutation_.end(), Index(0));
    shuffle(permutation_, stream_);
    position_ = 0;
  }
}

std::vector<Index> BatchSampler::next_batch(Index remaining_cap) {
  Index take = std::min(batch_size_, remaining_cap);
  if (mode_ == SamplingMode::kWithoutReplacementPerEpoch) {
    take = std::min(take, n_samples_ - position_);
  }
  if (take < 1) throw InvalidInput("next_batch: epoch budget exhausted");
  std::vector<Index> batch(static_cast<std::size_t>(take));
  if (mode_ == SamplingMode::kWithoutReplacementPerEpoch) {
    std::copy_n(permutation_.begin() + position_, take, batch.begin());
    position_ += take;
  } else {
    for (Index i = 0; i < take; ++i) {
      batch[static_cast<std::size_t>(i)] =
          static_cast<Index>(stream_.next_below(static_cast<std::uint64_t>(n_samples_)));
    }
  }
  return batch;
}

}  // namespace varchen
