#include "bst/operator.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

#include "bst/errors.hpp"

namespace bst {

double ImageGrid::dq() const { return n() > 1 ? q_values[1] - q_values[0] : 0.0; }
double ImageGrid::dx1() const { return m() > 1 ? x1_values[1] - x1_values[0] : 0.0; }

ImageGrid ImageGrid::uniform(std::size_t n, double q_min, double q_max, std::size_t m, double x1_min,
                             double x1_max) {
  if (n == 0 || m == 0) throw ConfigError("ImageGrid: empty grid");
  if (!(q_max > q_min) || !(x1_max > x1_min)) throw ConfigError("ImageGrid: empty range");
  ImageGrid g;
  g.q_values = lattice(q_min, (q_max - q_min) / static_cast<double>(n), n);
  g.x1_values = lattice(x1_min, (x1_max - x1_min) / static_cast<double>(m), m);
  g.validate();
  return g;
}

ImageGrid ImageGrid::full_scale() { return uniform(750, 0.0, 2.0, 600, -300.0, 300.0); }

void ImageGrid::validate() const {
  if (q_values.empty() || x1_values.empty()) throw ConfigError("ImageGrid: empty grid");
  if (q_values.front() < 0.0) throw ConfigError("ImageGrid: q must be nonnegative");
  auto uniform_axis = [](const std::vector<double>& v, const char* name) {
    if (v.size() < 2) return;
    const double h = v[1] - v[0];
    if (!(h > 0.0)) throw ConfigError(std::string("ImageGrid: ") + name + " must be ascending");
    for (std::size_t i = 1; i < v.size(); ++i)
      if (std::abs((v[i] - v[i - 1]) - h) > 1e-6 * std::max(1.0, std::abs(h)))
        throw ConfigError(std::string("ImageGrid: ") + name + " must be uniformly spaced");
  };
  uniform_axis(q_values, "q");
  uniform_axis(x1_values, "x1");
}

RowKey RowIndex::key(std::size_t row) const {
  if (row >= size()) throw DimensionError("RowIndex::key: row out of range");
  const std::size_t D = detector_x1.size();
  const std::size_t S = source_x1.size();
  return {row / (S * D), (row / D) % S, row % D};
}

BraggOperator::BraggOperator(RowIndex rows, ImageGrid grid, double slice_x2, CsrMatrix matrix,
                             bool store_transpose)
    : rows_(std::move(rows)), grid_(std::move(grid)), slice_x2_(slice_x2), matrix_(std::move(matrix)) {
  if (matrix_.rows() != rows_.size() || matrix_.cols() != grid_.size())
    throw DimensionError("BraggOperator: matrix shape does not match row index and grid");
  if (store_transpose) transpose_ = matrix_.transposed();
}

BraggOperator BraggOperator::scaled(double c) const {
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("BraggOperator::scaled: factor must be positive");
  auto scale = [c](const CsrMatrix& m) {
    auto v = m.values();
    for (double& x : v) x *= c;
    return CsrMatrix(m.rows(), m.cols(), m.row_ptr(), m.col_idx(), std::move(v));
  };
  BraggOperator out;
  out.rows_ = rows_;
  out.grid_ = grid_;
  out.slice_x2_ = slice_x2_;
  out.matrix_ = scale(matrix_);
  if (transpose_) out.transpose_ = scale(*transpose_);
  return out;
}

std::vector<double> BraggOperator::apply(std::span<const double> image) const {
  return matrix_.apply(image);
}

void BraggOperator::apply(std::span<const double> image, std::span<double> out) const {
  matrix_.apply(image, out);
}

std::vector<double> BraggOperator::apply_transpose(std::span<const double> data) const {
  std::vector<double> out(cols());
  apply_transpose(data, out);
  return out;
}

void BraggOperator::apply_transpose(std::span<const double> data, std::span<double> out) const {
  if (transpose_)
    transpose_->apply(data, out);
  else
    matrix_.apply_transpose(data, out);
}

namespace {

struct PixelTerm {
  std::uint32_t j;      // x1 pixel
  double weight;        // falloff * polarisation * solid angle * dx1
  double sin_theta;
};

// Geometric factors for every pixel seen by the pair (s1, d1); energy enters later.
std::vector<PixelTerm> pair_terms(const ScannerConfig& cfg, const ImageGrid& grid, double x2,
                                  double s1, double d1, double window, double dx1,
                                  const std::vector<bool>& mask) {
  const Vec3 s = source_point(s1, cfg);
  const Vec3 d = detector_point(d1, x2, cfg);
  std::vector<PixelTerm> out;
  for (std::size_t j = 0; j < grid.m(); ++j) {
    if (!mask.empty() && !mask[j]) continue;
    const double x1 = grid.x1_values[j];
    if (std::abs(x1 - s1) > window) continue;
    const Vec2 x{x1, x2};
    const double omega = solid_angle(x, d, cfg.detector_area);
    if (!(omega > 0.0)) continue;
    const double theta = bragg_angle(s, d, x);
    const double w = source_falloff(s, x) * polarization(theta) * omega * dx1;
    out.push_back({static_cast<std::uint32_t>(j), w, std::sin(theta)});
  }
  return out;
}

// Linear interpolation of q* onto the q samples; returns the number of entries written.
int deposit(double q, double w, const ImageGrid& grid, double q0, double dq, std::size_t& i0,
            double& w0, double& w1) {
  const std::size_t n = grid.n();
  if (q < q0) return 0;
  const double t = (q - q0) / dq;
  const auto k = static_cast<std::size_t>(std::floor(t));
  if (k + 1 < n) {
    const double frac = t - static_cast<double>(k);
    i0 = k;
    w0 = w * (1.0 - frac);
    w1 = w * frac;
    return 2;
  }
  if (k + 1 == n && t == static_cast<double>(k)) {
    i0 = k;
    w0 = w;
    w1 = 0.0;
    return 1;
  }
  return 0;
}

}  // namespace

BraggOperator build_operator(const ScannerConfig& cfg, const ImageGrid& grid, double x2,
                             const BuildOptions& options) {
  cfg.validate();
  grid.validate();
  if (!(x2 >= -cfg.w_x2 && x2 <= cfg.w_x2)) throw DomainError("build_operator: x2 outside the scanner");
  if (!options.x1_mask.empty() && options.x1_mask.size() != grid.m())
    throw DimensionError("build_operator: x1 mask length differs from the grid");
  if (grid.size() > std::numeric_limits<std::uint32_t>::max())
    throw DimensionError("build_operator: grid too large");

  const RowIndex index = RowIndex::from(cfg);
  const std::size_t E = cfg.energies.size();
  const std::size_t S = cfg.source_x1.size();
  const std::size_t D = cfg.detector_x1.size();
  const std::size_t n = grid.n();
  const double window = source_width(x2, cfg);
  const double dx1 = grid.m() > 1 ? grid.dx1() : 1.0;
  const double q0 = grid.q_values.front();
  const double dq = n > 1 ? grid.dq() : 1.0;

  auto row_entries = [&](const std::vector<PixelTerm>& terms, std::size_t e, auto&& emit) {
    const double scale = cfg.energies[e] / cfg.hc;
    const double i0e = cfg.spectrum(e);
    for (const auto& t : terms) {
      std::size_t i = 0;
      double w0 = 0.0;
      double w1 = 0.0;
      const int k = deposit(scale * t.sin_theta, t.weight * i0e, grid, q0, dq, i, w0, w1);
      if (k >= 1 && w0 > 0.0) emit(t.j * n + i, w0);
      if (k == 2 && w1 > 0.0) emit(t.j * n + i + 1, w1);
    }
  };

  // Pass 1: entries per row.
  std::vector<std::uint64_t> row_ptr(index.size() + 1, 0);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t pair = 0; pair < static_cast<std::ptrdiff_t>(S * D); ++pair) {
    const std::size_t s = static_cast<std::size_t>(pair) / D;
    const std::size_t d = static_cast<std::size_t>(pair) % D;
    const auto terms = pair_terms(cfg, grid, x2, cfg.source_x1[s], cfg.detector_x1[d], window, dx1,
                                  options.x1_mask);
    for (std::size_t e = 0; e < E; ++e) {
      std::uint64_t count = 0;
      row_entries(terms, e, [&](std::size_t, double) { ++count; });
      row_ptr[index.row(e, s, d) + 1] = count;
    }
  }
  for (std::size_t r = 0; r < index.size(); ++r) row_ptr[r + 1] += row_ptr[r];

  // Pass 2: fill.
  std::vector<std::uint32_t> col_idx(row_ptr.back());
  std::vector<double> values(row_ptr.back());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t pair = 0; pair < static_cast<std::ptrdiff_t>(S * D); ++pair) {
    const std::size_t s = static_cast<std::size_t>(pair) / D;
    const std::size_t d = static_cast<std::size_t>(pair) % D;
    const auto terms = pair_terms(cfg, grid, x2, cfg.source_x1[s], cfg.detector_x1[d], window, dx1,
                                  options.x1_mask);
    for (std::size_t e = 0; e < E; ++e) {
      auto k = row_ptr[index.row(e, s, d)];
      row_entries(terms, e, [&](std::size_t col, double v) {
        col_idx[k] = static_cast<std::uint32_t>(col);
        values[k] = v;
        ++k;
      });
    }
  }

  if (values.empty()) std::cerr << "warning: Bragg operator has no nonzero entries\n";
  CsrMatrix A(index.size(), grid.size(), std::move(row_ptr), std::move(col_idx), std::move(values));
  return BraggOperator(index, grid, x2, std::move(A), options.store_transpose);
}

std::vector<double> CharacteristicLibrary::indicator(std::size_t j) const {
  std::vector<double> z(m, 0.0);
  const auto& e = entries.at(j);
  for (std::size_t x = e.lo; x < e.hi; ++x) z[x] = 1.0;
  return z;
}

CharacteristicLibrary build_library(std::span<const double> centers, std::span<const double> widths,
                                    const ImageGrid& grid, bool merge_duplicates) {
  if (centers.empty() || widths.empty()) throw ConfigError("build_library: empty centre or width list");
  CharacteristicLibrary lib;
  lib.m = grid.m();
  const double tol = 1e-9 * std::max(1.0, grid.m() > 1 ? grid.dx1() : 1.0);
  for (double w : widths) {
    if (!(w > 0.0)) throw ConfigError("build_library: widths must be positive");
    for (double c : centers) {
      LibraryEntry e{c, w, 0, 0};
      bool found = false;
      for (std::size_t x = 0; x < grid.m(); ++x) {
        if (std::abs(grid.x1_values[x] - c) <= 0.5 * w + tol) {
          if (!found) e.lo = x;
          e.hi = x + 1;
          found = true;
        }
      }
      const bool repeat = merge_duplicates && !e.empty() && std::any_of(lib.entries.begin(), lib.entries.end(),
                                      [&](const LibraryEntry& o) { return o.lo == e.lo && o.hi == e.hi; });
      if (!repeat) lib.entries.push_back(e);
    }
  }
  return lib;
}

CharacteristicLibrary full_scale_library(const ImageGrid& grid) {
  const auto centers = lattice(-200.0, 5.0, 81);
  const auto widths = lattice(10.0, 5.0, 5);
  return build_library(centers, widths, grid);
}

CsrMatrix restrict(const BraggOperator& A, const LibraryEntry& entry) {
  const std::size_t n = A.grid().n();
  if (entry.hi > A.grid().m()) throw DimensionError("restrict: library entry outside the operator grid");
  const auto& M = A.matrix();
  const std::size_t p = M.rows();
  std::vector<std::uint64_t> ptr(p + 1, 0);
  std::vector<std::vector<double>> dense_rows(p);
#pragma omp parallel for schedule(dynamic, 256)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(p); ++r) {
    std::vector<double> acc;
    for (auto k = M.row_ptr()[r]; k < M.row_ptr()[r + 1]; ++k) {
      const std::size_t col = M.col_idx()[k];
      const std::size_t j = col / n;
      if (j < entry.lo || j >= entry.hi) continue;
      if (acc.empty()) acc.assign(n, 0.0);
      acc[col % n] += M.values()[k];
    }
    dense_rows[static_cast<std::size_t>(r)] = std::move(acc);
  }
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  for (std::size_t r = 0; r < p; ++r) {
    const auto& acc = dense_rows[r];
    for (std::size_t i = 0; i < acc.size(); ++i)
      if (acc[i] != 0.0) {
        idx.push_back(static_cast<std::uint32_t>(i));
        val.push_back(acc[i]);
      }
    ptr[r + 1] = val.size();
  }
  return CsrMatrix(p, n, std::move(ptr), std::move(idx), std::move(val));
}

Matrix gram(const CharacteristicLibrary& library) {
  const std::size_t l = library.size();
  Matrix G(l, l);
  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t j = 0; j < l; ++j) {
      const auto& a = library.entries[i];
      const auto& b = library.entries[j];
      const std::size_t lo = std::max(a.lo, b.lo);
      const std::size_t hi = std::min(a.hi, b.hi);
      G(i, j) = (a.empty() || b.empty() || hi <= lo) ? 0.0 : static_cast<double>(hi - lo);
    }
  return G;
}

}  // namespace bst
