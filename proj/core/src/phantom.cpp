#include "bst/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "bst/errors.hpp"
#include "bst/parallel.hpp"
#include "bst/random.hpp"
#include "csv.hpp"

namespace bst {

void PhantomSpec::validate() const {
  for (const auto& o : objects) {
    if (o.material.empty()) throw ConfigError("phantom: object without material");
    if (o.shape == ShapeKind::sphere && !(o.size > 0.0 && o.size <= 150.0))
      throw ConfigError("phantom: sphere radius must lie in (0, 150] mm");
    if (o.shape == ShapeKind::interval && !(o.size > 0.0)) throw ConfigError("phantom: width must be positive");
    if (!(o.scale >= 0.0)) throw ConfigError("phantom: negative scale");
  }
  if (clutter && !(clutter->side > 0.0 && clutter->attenuation_scale >= 0.0))
    throw ConfigError("phantom: invalid clutter");
}

std::vector<double> sample_spectrum(const BraggPeakList& peaks, const GaussianMixtureParams& gm,
                                    const ImageGrid& grid) {
  std::vector<double> out(grid.n(), 0.0);
  if (peaks.peaks.empty()) return out;
  const double dq = grid.n() > 1 ? grid.dq() : 0.0;
  const bool coarse = dq > 2.0 * std::sqrt(gm.sigma2);
  for (std::size_t i = 0; i < grid.n(); ++i) {
    const double q = grid.q_values[i];
    out[i] = coarse ? cell_average_F(std::max(0.0, q - 0.5 * dq), q + 0.5 * dq, peaks, gm)
                    : evaluate_F(q, peaks, gm);
  }
  return out;
}

PhantomImage make_phantom_image(const PhantomSpec& spec, const ImageGrid& grid,
                                const MaterialLibrary& materials) {
  spec.validate();
  PhantomImage out{Matrix(grid.n(), grid.m()), {}};
  const double tol = 1e-9 * std::max(1.0, grid.m() > 1 ? grid.dx1() : 1.0);
  for (const auto& o : spec.objects) {
    auto spectrum = sample_spectrum(materials.get(o.material).peaks, materials.mixture(), grid);
    for (double& v : spectrum) v *= o.scale;
    const double half = o.shape == ShapeKind::interval ? 0.5 * o.size : o.size;
    for (std::size_t j = 0; j < grid.m(); ++j) {
      if (std::abs(grid.x1_values[j] - o.center) > half + tol) continue;
      auto col = out.image.col(j);
      for (std::size_t i = 0; i < grid.n(); ++i) col[i] += spectrum[i];
    }
    out.spectra.push_back(std::move(spectrum));
  }
  const double peak = *std::max_element(out.image.data.begin(), out.image.data.end());
  if (peak > 0.0)
    for (double& v : out.image.data) v /= peak;
  return out;
}

Scene make_scene(const PhantomSpec& spec, MaterialLibrary& materials) {
  spec.validate();
  Scene scene;
  for (const auto& o : spec.objects) {
    if (o.shape != ShapeKind::sphere) throw ConfigError("make_scene: Monte Carlo phantoms need sphere objects");
    materials.load(o.material);
    scene.spheres.push_back({o.material, {o.center, spec.slice_x2, 0.0}, o.size});
  }
  if (spec.clutter) {
    materials.load(spec.clutter->material);
    const auto& base = materials.get(spec.clutter->material);
    Material clutter;
    clutter.peaks.material_id = kClutterMaterial;
    clutter.attenuation = base.attenuation.scaled(spec.clutter->attenuation_scale);
    materials.add(kClutterMaterial, std::move(clutter));
    const double h = 0.5 * spec.clutter->side;
    scene.clutter = Box{kClutterMaterial, {-h, -h, -h}, {h, h, h}};
  }
  return scene;
}

std::vector<double> analytic_mean(const BraggOperator& A, const Matrix& image, double eta_c) {
  if (!(eta_c > 0.0)) throw DomainError("analytic_data: eta_c must be positive");
  auto mean = A.apply(image.data);
  const double total = deterministic_sum(mean);
  if (!(total > 0.0)) throw DomainError("analytic_data: A y is identically zero");
  const double scale = eta_c * static_cast<double>(mean.size()) / total;
  for (double& v : mean) v *= scale;
  return mean;
}

Sinogram analytic_data(const BraggOperator& A, const Matrix& image, double eta_c, std::uint64_t seed) {
  const auto mean = analytic_mean(A, image, eta_c);
  Sinogram s{std::vector<double>(mean.size()), A.row_index(), A.slice_x2(), Provenance::analytic};
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(mean.size()); ++k) {
    if (mean[k] <= 0.0) continue;
    CounterRng rng(seed, {0x616e616c79746963ULL, static_cast<std::uint64_t>(k)});
    std::poisson_distribution<std::uint64_t> draw(mean[k]);
    s.values[k] = static_cast<double>(draw(rng));
  }
  return s;
}

std::vector<PhantomObject> parse_objects(const std::string& text) {
  std::vector<PhantomObject> out;
  std::stringstream all(text);
  std::string item;
  while (std::getline(all, item, ';')) {
    const auto trimmed = detail::trim(item);
    if (trimmed.empty()) continue;
    const auto f = detail::split(trimmed, ':');
    if (f.size() != 4 && f.size() != 5)
      throw ConfigError("phantom object '" + std::string(trimmed) + "': expected material:shape:center_mm:size_mm[:scale]");
    PhantomObject o;
    o.material = std::string(f[0]);
    if (f[1] == "interval")
      o.shape = ShapeKind::interval;
    else if (f[1] == "sphere")
      o.shape = ShapeKind::sphere;
    else
      throw ConfigError("phantom object: unknown shape '" + std::string(f[1]) + "'");
    o.center = detail::parse_double(f[2], "phantom object");
    o.size = detail::parse_double(f[3], "phantom object");
    if (f.size() == 5) o.scale = detail::parse_double(f[4], "phantom object");
    out.push_back(o);
  }
  return out;
}

std::string format_objects(const std::vector<PhantomObject>& objects) {
  std::ostringstream s;
  s.precision(17);
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& o = objects[i];
    if (i) s << ';';
    s << o.material << ':' << (o.shape == ShapeKind::interval ? "interval" : "sphere") << ':' << o.center
      << ':' << o.size;
    if (o.scale != 1.0) s << ':' << o.scale;
  }
  return s.str();
}

}  // namespace bst
