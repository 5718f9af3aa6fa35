#include "bst/sparse.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "bst/errors.hpp"

namespace bst {

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::uint64_t> row_ptr,
                     std::vector<std::uint32_t> col_idx, std::vector<double> values)
    : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
  if (cols_ > std::numeric_limits<std::uint32_t>::max())
    throw DimensionError("CsrMatrix: too many columns for 32-bit indices");
  if (row_ptr_.size() != rows_ + 1 || row_ptr_.front() != 0 || row_ptr_.back() != values_.size() ||
      col_idx_.size() != values_.size())
    throw DimensionError("CsrMatrix: inconsistent row pointers");
  for (std::size_t r = 0; r < rows_; ++r) {
    if (row_ptr_[r + 1] < row_ptr_[r]) throw DimensionError("CsrMatrix: row pointers decrease");
    for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      if (col_idx_[k] >= cols_) throw DimensionError("CsrMatrix: column index out of range");
      if (k > row_ptr_[r] && col_idx_[k] <= col_idx_[k - 1])
        throw DimensionError("CsrMatrix: column indices must be strictly ascending in row " +
                             std::to_string(r));
    }
  }
}

CsrMatrix CsrMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets) {
  for (const auto& t : triplets)
    if (t.row >= rows || t.col >= cols) throw DimensionError("from_triplets: index out of range");
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::uint64_t> ptr(rows + 1, 0);
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const auto& t = triplets[i];
    if (!idx.empty() && i > 0 && triplets[i - 1].row == t.row && triplets[i - 1].col == t.col) {
      val.back() += t.value;
      continue;
    }
    idx.push_back(static_cast<std::uint32_t>(t.col));
    val.push_back(t.value);
    ++ptr[t.row + 1];
  }
  for (std::size_t r = 0; r < rows; ++r) ptr[r + 1] += ptr[r];
  return CsrMatrix(rows, cols, std::move(ptr), std::move(idx), std::move(val));
}

CsrMatrix CsrMatrix::from_dense(std::size_t rows, std::size_t cols, std::span<const double> row_major) {
  if (row_major.size() != rows * cols) throw DimensionError("from_dense: size mismatch");
  std::vector<std::uint64_t> ptr(rows + 1, 0);
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = row_major[r * cols + c];
      if (v != 0.0) {
        idx.push_back(static_cast<std::uint32_t>(c));
        val.push_back(v);
      }
    }
    ptr[r + 1] = val.size();
  }
  return CsrMatrix(rows, cols, std::move(ptr), std::move(idx), std::move(val));
}

void CsrMatrix::apply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != cols_ || y.size() != rows_) throw DimensionError("CsrMatrix::apply: dimension mismatch");
#pragma omp parallel for schedule(dynamic, 256)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows_); ++r) {
    double s = 0.0;
    for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += values_[k] * x[col_idx_[k]];
    y[static_cast<std::size_t>(r)] = s;
  }
}

std::vector<double> CsrMatrix::apply(std::span<const double> x) const {
  std::vector<double> y(rows_);
  apply(x, y);
  return y;
}

void CsrMatrix::apply_transpose(std::span<const double> x, std::span<double> y) const {
  if (x.size() != rows_ || y.size() != cols_)
    throw DimensionError("CsrMatrix::apply_transpose: dimension mismatch");
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t r = 0; r < rows_; ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) y[col_idx_[k]] += values_[k] * xr;
  }
}

CsrMatrix CsrMatrix::transposed() const {
  if (rows_ > std::numeric_limits<std::uint32_t>::max())
    throw DimensionError("CsrMatrix::transposed: too many rows for 32-bit indices");
  std::vector<std::uint64_t> ptr(cols_ + 1, 0);
  for (auto c : col_idx_) ++ptr[c + 1];
  for (std::size_t c = 0; c < cols_; ++c) ptr[c + 1] += ptr[c];
  std::vector<std::uint64_t> next(ptr.begin(), ptr.end() - 1);
  std::vector<std::uint32_t> idx(nnz());
  std::vector<double> val(nnz());
  for (std::size_t r = 0; r < rows_; ++r)
    for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const auto dst = next[col_idx_[k]]++;
      idx[dst] = static_cast<std::uint32_t>(r);
      val[dst] = values_[k];
    }
  return CsrMatrix(cols_, rows_, std::move(ptr), std::move(idx), std::move(val));
}

std::vector<double> CsrMatrix::to_dense() const {
  std::vector<double> out(rows_ * cols_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r)
    for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) out[r * cols_ + col_idx_[k]] = values_[k];
  return out;
}

}  // namespace bst
