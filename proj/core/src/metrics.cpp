#include "bst/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "bst/errors.hpp"

namespace bst {

std::size_t EdgeMap::count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

EdgeMap edge_map(const Matrix& image, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("edge_map: tau must lie in (0, 1)");
  const std::size_t R = image.rows;
  const std::size_t C = image.cols;
  EdgeMap out{R, C, std::vector<std::uint8_t>(R * C, 0), tau};
  if (R == 0 || C == 0) return out;
  auto at = [&](std::ptrdiff_t r, std::ptrdiff_t c) {
    r = std::clamp<std::ptrdiff_t>(r, 0, static_cast<std::ptrdiff_t>(R) - 1);
    c = std::clamp<std::ptrdiff_t>(c, 0, static_cast<std::ptrdiff_t>(C) - 1);
    return image(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  };
  std::vector<double> mag(R * C);
  double peak = 0.0;
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t r = 0; r < R; ++r) {
      const auto i = static_cast<std::ptrdiff_t>(r);
      const auto j = static_cast<std::ptrdiff_t>(c);
      const double gr = (at(i + 1, j - 1) + 2.0 * at(i + 1, j) + at(i + 1, j + 1)) -
                        (at(i - 1, j - 1) + 2.0 * at(i - 1, j) + at(i - 1, j + 1));
      const double gc = (at(i - 1, j + 1) + 2.0 * at(i, j + 1) + at(i + 1, j + 1)) -
                        (at(i - 1, j - 1) + 2.0 * at(i, j - 1) + at(i + 1, j - 1));
      const double m = std::sqrt(gr * gr + gc * gc);
      mag[c * R + r] = m;
      peak = std::max(peak, m);
    }
  if (peak == 0.0) return out;
  for (std::size_t k = 0; k < mag.size(); ++k) out.mask[k] = mag[k] > tau * peak ? 1 : 0;
  return out;
}

double f1_score(const EdgeMap& truth, const EdgeMap& rec) {
  if (truth.rows != rec.rows || truth.cols != rec.cols) throw DimensionError("f1_score: shape mismatch");
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  for (std::size_t k = 0; k < truth.mask.size(); ++k) {
    const bool t = truth.mask[k] != 0;
    const bool r = rec.mask[k] != 0;
    tp += t && r;
    fp += !t && r;
    fn += t && !r;
  }
  if (tp + fp + fn == 0) return 1.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

double edge_f1(const Matrix& truth, const Matrix& reconstruction, double tau) {
  return f1_score(edge_map(truth, tau), edge_map(reconstruction, tau));
}

double relative_ls_error(std::span<const double> clean, std::span<const double> noisy) {
  if (clean.size() != noisy.size()) throw DimensionError("relative_ls_error: length mismatch");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < clean.size(); ++k) {
    const double d = noisy[k] - clean[k];
    num += d * d;
    den += clean[k] * clean[k];
  }
  if (!(den > 0.0)) throw DomainError("relative_ls_error: clean data has zero norm");
  return std::sqrt(num / den);
}

}  // namespace bst
