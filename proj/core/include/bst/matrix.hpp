#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bst/errors.hpp"

namespace bst {

/// Dense column-major matrix. Column c occupies data[c*rows, (c+1)*rows).
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[c * rows + r]; }
  double operator()(std::size_t r, std::size_t c) const { return data[c * rows + r]; }

  std::span<double> col(std::size_t c) { return {data.data() + c * rows, rows}; }
  std::span<const double> col(std::size_t c) const { return {data.data() + c * rows, rows}; }

  /// Copy in row-major order, the layout used on disk.
  std::vector<double> row_major() const {
    std::vector<double> out(data.size());
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = (*this)(r, c);
    return out;
  }
  static Matrix from_row_major(std::size_t r, std::size_t c, std::span<const double> values) {
    if (values.size() != r * c) throw DimensionError("Matrix::from_row_major: size mismatch");
    Matrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) m(i, j) = values[i * c + j];
    return m;
  }
};

}  // namespace bst
