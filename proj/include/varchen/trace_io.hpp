#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "varchen/optimizer.hpp"

namespace varchen {

inline constexpr std::string_view kTraceCsvHeader =
    "k,epoch,minibatch_loss,grad_norm,alpha,lambda_k,Lambda_k,flush,wall_ms";
inline constexpr std::string_view kEpochCsvHeader = "epoch,full_loss,full_grad_norm,val_metric";

/// Shortest round-trip-exact decimal form ("%.17g" trimmed).
std::string format_double(double value);

/// Per-iteration trace; one row per record, header as documented. wall_ms is
/// the only non-deterministic column.
void write_trace_csv(const std::string& path, const RunTrace& trace);

/// Per-epoch summary; val_metric is empty when the problem has none.
void write_epoch_csv(const std::string& path, const RunTrace& trace);

/// FNV-1a 64-bit, used for config hashing.
std::uint64_t fnv1a64(std::string_view text);

}  // namespace varchen
