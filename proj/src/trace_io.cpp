#include "varchen/trace_io.hpp"

#include <cstdio>
#include <fstream>

#include "varchen/errors.hpp"

namespace varchen {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

namespace {

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

}  // namespace

void write_trace_csv(const std::string& path, const RunTrace& trace) {
  std::ofstream out = open_for_write(path);
  out << kTraceCsvHeader << '\n';
  for (const auto& it : trace.iterations) {
    out << it.k << ',' << it.epoch << ',' << format_double(it.minibatch_loss) << ','
        << format_double(it.grad_norm) << ',' << format_double(it.alpha) << ','
        << format_double(it.lambda_k) << ',' << format_double(it.lambda_hi_k) << ','
        << (it.flush ? 1 : 0) << ',';
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", it.wall_ms);
    out << buf << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_epoch_csv(const std::string& path, const RunTrace& trace) {
  std::ofstream out = open_for_write(path);
  out << kEpochCsvHeader << '\n';
  for (const auto& ep : trace.epochs) {
    out << ep.epoch << ',' << format_double(ep.full_loss) << ','
        << format_double(ep.full_grad_norm) << ',';
    if (ep.val_metric) out << format_double(*ep.val_metric);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (const char c : text) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

}  // namespace varchen
