#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bst {

/// Thread count used by OpenMP regions (0 leaves the runtime default).
void set_threads(int threads);
int max_threads();

/// Reduction with a fixed chunking, so the rounding is the same for any thread count.
inline constexpr std::size_t kReduceChunk = 4096;

double deterministic_sum(std::span<const double> values);
double deterministic_dot(std::span<const double> a, std::span<const double> b);

}  // namespace bst
