#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "bst/geometry.hpp"
#include "bst/matrix.hpp"
#include "bst/sparse.hpp"

namespace bst {

/// Uniform (q, x1) sampling of the image. Sample k sits at min + k * step.
struct ImageGrid {
  std::vector<double> q_values;   ///< n ascending [1/A]
  std::vector<double> x1_values;  ///< m ascending [mm]

  std::size_t n() const { return q_values.size(); }
  std::size_t m() const { return x1_values.size(); }
  std::size_t size() const { return n() * m(); }
  double dq() const;
  double dx1() const;

  /// n samples on [q_min, q_max) and m samples on [x1_min, x1_max).
  static ImageGrid uniform(std::size_t n, double q_min, double q_max, std::size_t m, double x1_min,
                           double x1_max);
  /// 750 x 600 grid on [0, 2) x [-300, 300).
  static ImageGrid full_scale();

  void validate() const;

  /// Image vectors are x1-major: entry (q_i, x1_j) lives at j * n + i.
  std::size_t column(std::size_t i, std::size_t j) const { return j * n() + i; }
};

struct RowKey {
  std::size_t energy;
  std::size_t source;
  std::size_t detector;
};

/// Bijection between (E, s1, d1) and data rows, energy-major.
struct RowIndex {
  std::vector<double> energies;
  std::vector<double> source_x1;
  std::vector<double> detector_x1;

  static RowIndex from(const ScannerConfig& cfg) { return {cfg.energies, cfg.source_x1, cfg.detector_x1}; }

  std::size_t size() const { return energies.size() * source_x1.size() * detector_x1.size(); }
  std::size_t row(std::size_t e, std::size_t s, std::size_t d) const {
    return (e * source_x1.size() + s) * detector_x1.size() + d;
  }
  RowKey key(std::size_t row) const;
  bool operator==(const RowIndex&) const = default;
};

struct BuildOptions {
  /// Per x1 pixel; when non-empty, only flagged pixels receive entries.
  std::vector<bool> x1_mask;
  /// Keep A^T for parallel, order-stable transpose products.
  bool store_transpose = true;
};

/// The discretized Bragg transform for one slice.
class BraggOperator {
 public:
  BraggOperator() = default;
  BraggOperator(RowIndex rows, ImageGrid grid, double slice_x2, CsrMatrix matrix,
                bool store_transpose = true);

  const RowIndex& row_index() const { return rows_; }
  const ImageGrid& grid() const { return grid_; }
  double slice_x2() const { return slice_x2_; }
  const CsrMatrix& matrix() const { return matrix_; }
  std::size_t rows() const { return matrix_.rows(); }
  std::size_t cols() const { return matrix_.cols(); }
  bool has_transpose() const { return transpose_.has_value(); }

  /// Copy with every entry multiplied by c > 0.
  BraggOperator scaled(double c) const;

  std::vector<double> apply(std::span<const double> image) const;
  void apply(std::span<const double> image, std::span<double> out) const;
  std::vector<double> apply_transpose(std::span<const double> data) const;
  void apply_transpose(std::span<const double> data, std::span<double> out) const;

 private:
  RowIndex rows_;
  ImageGrid grid_;
  double slice_x2_ = 0.0;
  CsrMatrix matrix_;
  std::optional<CsrMatrix> transpose_;
};

BraggOperator build_operator(const ScannerConfig& cfg, const ImageGrid& grid, double x2,
                             const BuildOptions& options = {});

/// One library element: the x1 interval |x1 - center| <= width / 2.
struct LibraryEntry {
  double center = 0.0;  ///< mm
  double width = 0.0;   ///< full width, mm
  std::size_t lo = 0;   ///< first pixel of the support
  std::size_t hi = 0;   ///< one past the last pixel; lo == hi when empty

  bool empty() const { return lo == hi; }
  std::size_t size() const { return hi - lo; }
};

struct CharacteristicLibrary {
  std::vector<LibraryEntry> entries;
  std::size_t m = 0;  ///< x1 pixels of the grid the library lives on

  std::size_t size() const { return entries.size(); }
  /// Indicator z_j over x1 pixels.
  std::vector<double> indicator(std::size_t j) const;
};

/// Every (width, center) pair, widths outer and centers inner. Entries outside the
/// grid are kept with empty support. With `merge_duplicates`, a pair whose pixel
/// support repeats an earlier entry is dropped.
CharacteristicLibrary build_library(std::span<const double> centers, std::span<const double> widths,
                                    const ImageGrid& grid, bool merge_duplicates = false);

/// 81 centres (-200..200 step 5) times 5 widths (10..30 step 5), l = 405.
CharacteristicLibrary full_scale_library(const ImageGrid& grid);

/// A_j = A C_j as a p x n matrix: columns of A summed over the support of entry j.
CsrMatrix restrict(const BraggOperator& A, const LibraryEntry& entry);

/// G = Z^T Z; G_ij counts shared pixels.
Matrix gram(const CharacteristicLibrary& library);

}  // namespace bst
