#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bst/materials.hpp"
#include "bst/matrix.hpp"
#include "bst/operator.hpp"
#include "bst/scene.hpp"
#include "bst/sinogram.hpp"

namespace bst {

enum class ShapeKind { interval, sphere };

struct PhantomObject {
  std::string material;
  ShapeKind shape = ShapeKind::interval;
  double center = 0.0;  ///< x1 of the centre [mm]
  double size = 0.0;    ///< full width for intervals, radius for spheres [mm]
  double scale = 1.0;   ///< multiplies the material's F curve
};

struct ClutterSpec {
  std::string material = "cellulose";
  double side = 300.0;              ///< cube edge [mm]
  double attenuation_scale = 0.1;   ///< fraction of the base material's attenuation
};

struct PhantomSpec {
  std::vector<PhantomObject> objects;
  double slice_x2 = 0.0;
  std::optional<ClutterSpec> clutter;

  void validate() const;
};

/// Material id under which the diluted clutter is registered.
inline constexpr const char* kClutterMaterial = "clutter";

struct PhantomImage {
  Matrix image;                              ///< n x m, max 1 unless empty
  std::vector<std::vector<double>> spectra;  ///< per object, on the q grid, before normalisation
};

/// F(q) on the grid: cell averages where the grid under-resolves the peaks, point values otherwise.
std::vector<double> sample_spectrum(const BraggPeakList& peaks, const GaussianMixtureParams& gm,
                                    const ImageGrid& grid);

/// Sum of F_material(q) over each object's x1 support. Spheres contribute their chord on the slice.
PhantomImage make_phantom_image(const PhantomSpec& spec, const ImageGrid& grid,
                                const MaterialLibrary& materials);

/// Scene of spheres (and clutter) for the Monte Carlo engine. Loads the clutter material.
Scene make_scene(const PhantomSpec& spec, MaterialLibrary& materials);

/// Independent Poisson draws with mean eta_c * p * A y / ||A y||_1.
Sinogram analytic_data(const BraggOperator& A, const Matrix& image, double eta_c, std::uint64_t seed);

/// The mean vector used by analytic_data.
std::vector<double> analytic_mean(const BraggOperator& A, const Matrix& image, double eta_c);

/// Parse "NaCl:interval:-75:20;graphite:interval:75:20" (optional ":scale" suffix).
std::vector<PhantomObject> parse_objects(const std::string& text);
std::string format_objects(const std::vector<PhantomObject>& objects);

}  // namespace bst
