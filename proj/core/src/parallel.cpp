#include "bst/parallel.hpp"

#include <algorithm>

#include <omp.h>

#include "bst/errors.hpp"

namespace bst {

void set_threads(int threads) {
  if (threads < 0) throw ConfigError("thread count must be nonnegative");
  if (threads > 0) omp_set_num_threads(threads);
}

int max_threads() { return omp_get_max_threads(); }

namespace {

template <typename F>
double chunked(std::size_t n, F&& term) {
  const std::size_t chunks = (n + kReduceChunk - 1) / kReduceChunk;
  std::vector<double> partial(chunks, 0.0);
#pragma omp parallel for schedule(static) if (chunks > 1)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const std::size_t lo = static_cast<std::size_t>(c) * kReduceChunk;
    const std::size_t hi = std::min(n, lo + kReduceChunk);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    partial[static_cast<std::size_t>(c)] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace

double deterministic_sum(std::span<const double> values) {
  return chunked(values.size(), [&](std::size_t i) { return values[i]; });
}

double deterministic_dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("deterministic_dot: length mismatch");
  return chunked(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

}  // namespace bst
