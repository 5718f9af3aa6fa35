#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bst/geometry.hpp"
#include "bst/materials.hpp"

namespace bst {

struct Sphere {
  std::string material;
  Vec3 center;
  double radius = 0.0;  ///< mm
};

/// Axis-aligned box; used for clutter.
struct Box {
  std::string material;
  Vec3 lo;
  Vec3 hi;

  bool contains(Vec3 p) const;
};

/// Spheres are the scatterers. The optional clutter box attenuates but never scatters;
/// where a sphere sits inside it the sphere material replaces the clutter.
struct Scene {
  std::vector<Sphere> spheres;
  std::optional<Box> clutter;

  /// Index of the sphere containing p, if any (first match).
  std::optional<std::size_t> sphere_at(Vec3 p) const;
};

struct Chord {
  std::string material;
  double length = 0.0;  ///< mm
};

/// Chord lengths along the ray origin + t * direction, t >= 0 (direction must be unit).
std::vector<Chord> ray_lengths(Vec3 origin, Vec3 direction, const Scene& scene);

/// Chord lengths on the segment from a to b.
std::vector<Chord> segment_lengths(Vec3 a, Vec3 b, const Scene& scene);

/// Attenuation of the segment a -> b at `energy`: exp(-sum mu * length).
double transmission(Vec3 a, Vec3 b, double energy, const Scene& scene, const MaterialLibrary& materials);

}  // namespace bst
