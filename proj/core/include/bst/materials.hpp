#pragma once

#include <array>
#include <complex>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "bst/geometry.hpp"

namespace bst {

struct BraggPeak {
  double q = 0.0;  ///< peak position [1/A]
  double g = 0.0;  ///< relative intensity
};

/// Bragg peak positions and intensities for one material (the support of F(q)).
struct BraggPeakList {
  std::string material_id;
  std::vector<BraggPeak> peaks;
  double q_max = 2.0;

  void validate() const;
};

struct GaussianMixtureParams {
  double sigma2 = 1e-6;  ///< variance of each peak Gaussian [1/A^2]
};

/// Raw Gaussian-mixture sum  sum_j g_j exp(-(q - q_j)^2 / sigma2).
double mixture_value(double q, const BraggPeakList& peaks, const GaussianMixtureParams& gm);

/// Maximum of the mixture. Peaks closer than a few sigma can merge, so each
/// centre is refined on a local grid.
double mixture_max(const BraggPeakList& peaks, const GaussianMixtureParams& gm);

/// Rescale g so the mixture peaks at exactly 1.
void normalize(BraggPeakList& peaks, const GaussianMixtureParams& gm);

/// F(q) for a normalized peak list. Identical to mixture_value; kept as the
/// named entry point for the Bragg differential cross section.
double evaluate_F(double q, const BraggPeakList& peaks, const GaussianMixtureParams& gm);

/// Mean of F over [q_lo, q_hi], computed exactly with erf.
double cell_average_F(double q_lo, double q_hi, const BraggPeakList& peaks,
                      const GaussianMixtureParams& gm);

/// CSV with header `q_invA,intensity`. Peaks at or beyond q_max are dropped.
BraggPeakList load_peak_list(const std::filesystem::path& path, const std::string& material_id,
                             double q_max = 2.0);
void save_peak_list(const std::filesystem::path& path, const BraggPeakList& peaks);

// Crystallography.

using MillerIndex = std::array<int, 3>;

/// a0 / sqrt(h^2 + k^2 + l^2).
double d_spacing_cubic(double a0, MillerIndex hkl);

/// Hexagonal lattice: 1/d^2 = 4 (h^2 + hk + k^2) / (3 a^2) + l^2 / c^2.
double d_spacing_hexagonal(double a, double c, MillerIndex hkl);

/// q = 1 / (2 d) from the Bragg condition.
double peak_q_from_spacing(double d);

/// Cromer-Mann parametrisation f(s) = sum a_i exp(-b_i s^2) + c, with s = sin(theta)/lambda = q.
struct CromerMann {
  std::array<double, 4> a{};
  std::array<double, 4> b{};
  double c = 0.0;

  double operator()(double q) const;

  static CromerMann carbon();
  static CromerMann sodium();
  static CromerMann chlorine();
};

struct CellAtom {
  std::function<double(double)> form_factor;
  Vec3 fractional;  ///< position inside the unit cell, each coordinate in [0, 1]
};

/// |sum_i F_i(q) exp(-2 pi i x_i . H)|^2.
double structure_factor(double q, const std::vector<CellAtom>& cell, MillerIndex hkl);

enum class LatticeKind { cubic, hexagonal };

struct UnitCell {
  LatticeKind kind = LatticeKind::cubic;
  double a = 1.0;
  double c = 1.0;  ///< hexagonal only
  std::vector<CellAtom> atoms;

  double d_spacing(MillerIndex hkl) const;

  static UnitCell sodium_chloride();
  static UnitCell diamond();
  static UnitCell graphite();
};

/// Powder peak list below q_max: reflections with equal q are merged and
/// weighted by (1/q) d_H |F_H|^2 = |F_H|^2 / (2 q^2). Extinct reflections are dropped.
BraggPeakList powder_peaks(const UnitCell& cell, const std::string& material_id, double q_max);

// Attenuation.

enum class Interaction { none, photoelectric, incoherent, coherent };

struct AttenuationRow {
  double energy = 0.0;  ///< keV
  double mu_pe = 0.0;   ///< 1/mm
  double mu_inc = 0.0;
  double mu_coh = 0.0;
};

/// Linear attenuation coefficients against energy, interpolated log-log.
class AttenuationTable {
 public:
  AttenuationTable() = default;
  AttenuationTable(std::string material_id, std::vector<AttenuationRow> rows);

  const std::string& material_id() const { return material_id_; }
  const std::vector<AttenuationRow>& rows() const { return rows_; }
  double min_energy() const { return rows_.front().energy; }
  double max_energy() const { return rows_.back().energy; }

  /// Partial coefficient at E; throws DomainError outside the table range.
  double mu(Interaction kind, double energy) const;
  double total_mu(double energy) const;

  /// Every coefficient multiplied by `factor` (e.g. diluted clutter).
  AttenuationTable scaled(double factor) const;

 private:
  std::string material_id_;
  std::vector<AttenuationRow> rows_;
};

/// CSV with header `E_keV,mu_pe_per_mm,mu_inc_per_mm,mu_coh_per_mm`.
AttenuationTable load_attenuation_table(const std::filesystem::path& path,
                                        const std::string& material_id);
double total_mu(double energy, const AttenuationTable& table);

/// Everything the simulators need to know about one material.
struct Material {
  BraggPeakList peaks;        ///< empty for amorphous (non-Bragg) media
  AttenuationTable attenuation;
};

/// Materials indexed by id. `load` reads `<dir>/<id>.peaks.csv` (optional, Bragg
/// scatterers only) and `<dir>/<id>.atten.csv`. Read-only after loading.
class MaterialLibrary {
 public:
  MaterialLibrary() = default;
  explicit MaterialLibrary(std::filesystem::path directory, GaussianMixtureParams gm = {});

  void load(const std::string& id);
  void add(const std::string& id, Material material);
  const Material& get(const std::string& id) const;
  bool contains(const std::string& id) const { return materials_.count(id) != 0; }
  const GaussianMixtureParams& mixture() const { return gm_; }
  const std::filesystem::path& directory() const { return directory_; }

 private:
  std::filesystem::path directory_;
  GaussianMixtureParams gm_;
  std::map<std::string, Material> materials_;
};

}  // namespace bst
