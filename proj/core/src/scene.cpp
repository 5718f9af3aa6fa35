#include "bst/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bst/errors.hpp"

namespace bst {

bool Box::contains(Vec3 p) const {
  return p.x1 >= lo.x1 && p.x1 <= hi.x1 && p.x2 >= lo.x2 && p.x2 <= hi.x2 && p.x3 >= lo.x3 &&
         p.x3 <= hi.x3;
}

std::optional<std::size_t> Scene::sphere_at(Vec3 p) const {
  for (std::size_t i = 0; i < spheres.size(); ++i) {
    const Vec3 r = p - spheres[i].center;
    if (dot(r, r) <= spheres[i].radius * spheres[i].radius) return i;
  }
  return std::nullopt;
}

namespace {

struct Interval {
  double t0 = 0.0;
  double t1 = 0.0;
  bool hit = false;
};

Interval clip(Interval iv, double t_min, double t_max) {
  if (!iv.hit) return iv;
  iv.t0 = std::max(iv.t0, t_min);
  iv.t1 = std::min(iv.t1, t_max);
  iv.hit = iv.t1 > iv.t0;
  return iv;
}

Interval sphere_interval(Vec3 o, Vec3 d, const Sphere& s) {
  const Vec3 oc = o - s.center;
  const double bq = dot(oc, d);
  const double c = dot(oc, oc) - s.radius * s.radius;
  const double disc = bq * bq - c;
  if (disc <= 0.0) return {};
  const double h = std::sqrt(disc);
  return {-bq - h, -bq + h, true};
}

Interval box_interval(Vec3 o, Vec3 d, const Box& b) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  const double oo[3] = {o.x1, o.x2, o.x3};
  const double dd[3] = {d.x1, d.x2, d.x3};
  const double lo[3] = {b.lo.x1, b.lo.x2, b.lo.x3};
  const double hi[3] = {b.hi.x1, b.hi.x2, b.hi.x3};
  for (int k = 0; k < 3; ++k) {
    if (dd[k] == 0.0) {
      if (oo[k] < lo[k] || oo[k] > hi[k]) return {};
      continue;
    }
    double a = (lo[k] - oo[k]) / dd[k];
    double c = (hi[k] - oo[k]) / dd[k];
    if (a > c) std::swap(a, c);
    t0 = std::max(t0, a);
    t1 = std::min(t1, c);
  }
  if (!(t1 > t0)) return {};
  return {t0, t1, true};
}

std::vector<Chord> chords(Vec3 o, Vec3 d, double t_min, double t_max, const Scene& scene) {
  std::vector<Chord> out;
  std::vector<Interval> sphere_ivs;
  for (const auto& s : scene.spheres) {
    const Interval iv = clip(sphere_interval(o, d, s), t_min, t_max);
    sphere_ivs.push_back(iv);
    if (iv.hit) out.push_back({s.material, iv.t1 - iv.t0});
  }
  if (scene.clutter) {
    const Interval box = clip(box_interval(o, d, *scene.clutter), t_min, t_max);
    if (box.hit) {
      double len = box.t1 - box.t0;
      for (const auto& iv : sphere_ivs) {
        if (!iv.hit) continue;
        len -= std::max(0.0, std::min(iv.t1, box.t1) - std::max(iv.t0, box.t0));
      }
      if (len > 0.0) out.push_back({scene.clutter->material, len});
    }
  }
  return out;
}

}  // namespace

std::vector<Chord> ray_lengths(Vec3 origin, Vec3 direction, const Scene& scene) {
  if (std::abs(norm(direction) - 1.0) > 1e-9) throw DomainError("ray_lengths: direction must be a unit vector");
  return chords(origin, direction, 0.0, std::numeric_limits<double>::infinity(), scene);
}

std::vector<Chord> segment_lengths(Vec3 a, Vec3 b, const Scene& scene) {
  const Vec3 d = b - a;
  const double len = norm(d);
  if (len == 0.0) return {};
  return chords(a, (1.0 / len) * d, 0.0, len, scene);
}

double transmission(Vec3 a, Vec3 b, double energy, const Scene& scene, const MaterialLibrary& materials) {
  double tau = 0.0;
  for (const auto& c : segment_lengths(a, b, scene))
    tau += materials.get(c.material).attenuation.total_mu(energy) * c.length;
  return std::exp(-tau);
}

}  // namespace bst
