#include "bst/geometry.hpp"

#include <algorithm>
#include <sstream>

#include "bst/errors.hpp"

namespace bst {

ScannerConfig ScannerConfig::full_scale() {
  ScannerConfig cfg;
  cfg.source_x1 = lattice(-300.0, 20.0, 31);
  cfg.detector_x1 = lattice(-300.0, 1.0, 600);
  cfg.energies = lattice(1.0, 1.0, 29);
  return cfg;
}

std::vector<double> lattice(double first, double step, std::size_t count) {
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i) v[i] = first + step * static_cast<double>(i);
  return v;
}

namespace {

bool strictly_increasing(const std::vector<double>& v) {
  return std::adjacent_find(v.begin(), v.end(), [](double a, double b) { return !(a < b); }) ==
         v.end();
}

}  // namespace

void ScannerConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("scanner: " + what); };
  if (!(w_x1 > 0.0)) fail("w_x1 must be positive");
  if (!(w_x2 > 0.0)) fail("w_x2 must be positive");
  if (!(beta > 0.0 && beta < std::numbers::pi)) fail("beta must lie in (0, pi)");
  if (source_x1.empty()) fail("no source positions");
  if (detector_x1.empty()) fail("no detector positions");
  if (energies.empty()) fail("no energies");
  if (!strictly_increasing(source_x1)) fail("source positions must be strictly increasing");
  if (!strictly_increasing(detector_x1)) fail("detector positions must be strictly increasing");
  if (!strictly_increasing(energies)) fail("energies must be strictly increasing");
  if (!(energies.front() > 0.0)) fail("energies must be positive");
  if (!source_spectrum.empty()) {
    if (source_spectrum.size() != energies.size()) fail("source spectrum length != energy count");
    for (double v : source_spectrum)
      if (!(v >= 0.0)) fail("source spectrum must be nonnegative");
  }
  if (!(detector_area > 0.0)) fail("detector area must be positive");
  if (!(hc > 0.0)) fail("hc must be positive");
  const double top = phi_intercept + phi_slope * w_x2;
  const double bottom = phi_intercept - phi_slope * w_x2;
  if (std::abs(top) > 1e-9 * std::max(1.0, std::abs(phi_intercept)))
    fail("Phi(w_x2) must be 0");
  if (!(bottom > 0.0)) fail("Phi(-w_x2) must be positive");
}

double detector_height(double x2, const ScannerConfig& cfg) {
  if (!(x2 >= -cfg.w_x2 && x2 <= cfg.w_x2)) {
    std::ostringstream msg;
    msg << "detector_height: x2 = " << x2 << " outside [" << -cfg.w_x2 << ", " << cfg.w_x2 << "]";
    throw DomainError(msg.str());
  }
  return cfg.phi_intercept + cfg.phi_slope * x2;
}

double source_width(double x2, const ScannerConfig& cfg) {
  if (!(x2 >= -cfg.w_x2 && x2 <= cfg.w_x2))
    throw DomainError("source_width: x2 outside [-w_x2, w_x2]");
  return (cfg.w_x2 + x2) * std::tan(0.5 * cfg.beta);
}

double bragg_angle(Vec3 s, Vec3 d, Vec2 x) {
  const Vec3 p = lift(x);
  const Vec3 in = p - s;
  const Vec3 out = d - p;
  const double nin = norm(in);
  const double nout = norm(out);
  if (nin == 0.0 || nout == 0.0)
    throw GeometryError("bragg_angle: scattering site coincides with source or detector");
  const double c = std::clamp(dot(in, out) / (nin * nout), -1.0, 1.0);
  return 0.5 * std::acos(c);
}

double solid_angle(Vec2 x, Vec3 d, double detector_area) {
  const Vec3 r = lift(x) - d;
  const double n = norm(r);
  if (n == 0.0) throw GeometryError("solid_angle: scattering site coincides with detector");
  return detector_area * (-r.x2) / (n * n * n);
}

double polarization(double theta) {
  const double c = std::cos(2.0 * theta);
  return 0.5 * (1.0 + c * c);
}

double source_falloff(Vec3 s, Vec2 x) {
  const Vec3 r = s - lift(x);
  const double r2 = dot(r, r);
  if (r2 == 0.0) throw GeometryError("source_falloff: scattering site coincides with source");
  return 1.0 / r2;
}

double momentum_transfer(double energy, double theta, double hc) {
  return energy / hc * std::sin(theta);
}

Vec3 detector_point(double d1, double x2, const ScannerConfig& cfg) {
  return {d1, cfg.w_x2, detector_height(x2, cfg)};
}

}  // namespace bst
