#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bst/matrix.hpp"

namespace bst {

struct EdgeMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> mask;  ///< column-major like Matrix
  double tau = 0.2;

  std::size_t count() const;
  bool operator()(std::size_t r, std::size_t c) const { return mask[c * rows + r] != 0; }
};

/// Sobel gradient magnitude with replicate boundary, thresholded at tau * max.
EdgeMap edge_map(const Matrix& image, double tau = 0.2);

/// 2TP / (2TP + FP + FN); 1 when both maps are empty.
double f1_score(const EdgeMap& truth, const EdgeMap& reconstruction);

/// Edge F1 of two images at the same threshold.
double edge_f1(const Matrix& truth, const Matrix& reconstruction, double tau = 0.2);

/// ||noisy - clean||_2 / ||clean||_2.
double relative_ls_error(std::span<const double> clean, std::span<const double> noisy);

}  // namespace bst
