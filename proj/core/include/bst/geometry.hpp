#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

namespace bst {

struct Vec2 {
  double x1 = 0.0;
  double x2 = 0.0;
};

struct Vec3 {
  double x1 = 0.0;
  double x2 = 0.0;
  double x3 = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x1 + b.x1, a.x2 + b.x2, a.x3 + b.x3}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x1 - b.x1, a.x2 - b.x2, a.x3 - b.x3}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x1, s * a.x2, s * a.x3}; }
};

inline double dot(Vec3 a, Vec3 b) { return a.x1 * b.x1 + a.x2 * b.x2 + a.x3 * b.x3; }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

/// Lift a point on the scanning plane into 3-D (x3 = 0).
inline Vec3 lift(Vec2 x) { return {x.x1, x.x2, 0.0}; }

/// Keep the geometry in millimetres, energies in keV and q in inverse Angstrom.
struct ScannerConfig {
  double w_x1 = 300.0;  ///< half-width of the scanner in x1 [mm]
  double w_x2 = 410.0;  ///< half-depth in x2: sources at -w_x2, detectors at +w_x2 [mm]
  double beta = 120.0 * std::numbers::pi / 180.0;  ///< source fan opening angle [rad]
  std::vector<double> source_x1;    ///< source positions [mm], ascending
  std::vector<double> detector_x1;  ///< detector positions [mm], ascending
  std::vector<double> energies;     ///< bin-centre energies [keV], strictly increasing
  std::vector<double> source_spectrum;  ///< I0(E) per energy; empty means uniform 1
  double detector_area = 1.0;      ///< D_A [mm^2]
  double hc = 12.398;              ///< keV * Angstrom
  double phi_slope = -75.0 / 820.0;  ///< detector height map Phi(x2) = intercept + slope * x2
  double phi_intercept = 37.5;       ///< [mm]

  /// 31 sources at 20 mm, 600 detectors at 1 mm, energies 1..29 keV.
  static ScannerConfig full_scale();

  /// Throws ConfigError when an invariant is violated.
  void validate() const;

  double min_energy() const { return energies.front(); }
  double max_energy() const { return energies.back(); }
  double spectrum(std::size_t energy_index) const {
    return source_spectrum.empty() ? 1.0 : source_spectrum[energy_index];
  }
};

/// Evenly spaced values first, first + step, ... (count entries).
std::vector<double> lattice(double first, double step, std::size_t count);

// Scanner kernels. All are pure and safe to call concurrently.

/// Detector x3 offset Phi(x2) that collimates onto the line at depth x2.
double detector_height(double x2, const ScannerConfig& cfg);

/// Half-width of the source fan at depth x2: (w_x2 + x2) tan(beta / 2).
double source_width(double x2, const ScannerConfig& cfg);

/// Bragg angle theta (half the scattering angle) at x for the path s -> x -> d.
double bragg_angle(Vec3 s, Vec3 d, Vec2 x);

/// Detector solid-angle weight D_A ((x,0) - d) . (0,-1,0) / |(x,0) - d|^3.
double solid_angle(Vec2 x, Vec3 d, double detector_area);

/// Thomson polarisation factor (1 + cos^2 2theta) / 2.
double polarization(double theta);

/// Inverse-square source falloff 1 / |s - (x,0)|^2.
double source_falloff(Vec3 s, Vec2 x);

/// q = (E / hc) sin(theta).
double momentum_transfer(double energy, double theta, double hc);

/// Source and detector positions for a scan of the line at depth x2.
inline Vec3 source_point(double s1, const ScannerConfig& cfg) { return {s1, -cfg.w_x2, 0.0}; }
Vec3 detector_point(double d1, double x2, const ScannerConfig& cfg);

}  // namespace bst
