#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bst/geometry.hpp"
#include "bst/materials.hpp"
#include "bst/phantom.hpp"
#include "bst/random.hpp"
#include "bst/scene.hpp"
#include "bst/sinogram.hpp"

namespace bst {

inline constexpr double kElectronRestEnergy = 511.0;  ///< m_e c^2 [keV]

enum class McMode {
  forced,   ///< every scatter event is scored at every detector with its angular density
  literal,  ///< the scattered direction is sampled and must hit a detector square
};

struct InteractionToggles {
  bool photoelectric = true;
  bool incoherent = true;
  bool coherent = true;
};

struct McConfig {
  double photons_per_projection_per_energy = 1e6;  ///< photon budget the tallies are scaled to
  std::uint64_t histories = 20000;                 ///< simulated histories per (source, energy)
  std::uint64_t seed = 1;
  PhantomSpec phantom;  ///< sphere objects (plus optional clutter)
  double step = 1.0;    ///< interaction step [mm]
  InteractionToggles toggles;
  bool attenuation = true;  ///< Beer-Lambert survival on both legs
  McMode mode = McMode::forced;
  std::vector<std::size_t> energy_indices;  ///< simulate only these energies; empty means all
  double detector_pitch = 0.0;              ///< literal mode square edge in x1; 0 uses the detector spacing

  void validate() const;
};

struct Tally {
  std::size_t energies = 0;
  std::size_t sources = 0;
  std::size_t detectors = 0;
  /// Counts by (scattered-energy bin, source, detector), energy-major like the operator rows.
  std::vector<std::uint64_t> coherent;
  std::vector<std::uint64_t> compton;
  /// Expected counts before the Poisson draw (forced mode); equal to the counts in literal mode.
  std::vector<double> coherent_expected;
  std::vector<double> compton_expected;

  std::uint64_t launched = 0;
  std::uint64_t scattered = 0;
  std::uint64_t absorbed = 0;
  std::uint64_t transmitted = 0;
  std::uint64_t escaped = 0;

  Sinogram to_sinogram(const ScannerConfig& scanner, double slice_x2) const;
};

/// Step 3 of the transport: NI with probability exp(-mu * step), otherwise by the partials.
Interaction sample_interaction(double energy, const AttenuationTable& table, double step, CounterRng& rng,
                               InteractionToggles toggles = {});

/// Scattering angle omega for a coherent event: a reachable peak drawn with weight
/// g_j q_j P(theta_j), then omega = 2 asin(hc q_j / E). None when no peak is reachable.
std::optional<double> sample_coherent_angle(double energy, const BraggPeakList& peaks, double hc,
                                            CounterRng& rng);

/// E / (1 + (E / 511 keV)(1 - cos omega)).
double compton_energy(double energy, double omega);

/// Klein-Nishina d sigma / d Omega in units of r_e^2.
double klein_nishina_dcs(double energy, double omega);

/// Inverse-CDF sampler of the Klein-Nishina polar angle at one energy.
class KleinNishinaSampler {
 public:
  explicit KleinNishinaSampler(double energy, std::size_t table_size = 20000);
  double sample(CounterRng& rng) const;
  /// Total cross section in units of r_e^2.
  double total() const { return total_; }
  double energy() const { return energy_; }

 private:
  double energy_;
  std::vector<double> omega_;
  std::vector<double> cdf_;
  double total_ = 0.0;
};

double sample_klein_nishina(double energy, CounterRng& rng);

/// Integral of F(q) P dOmega over the sphere for a coherent event at `energy`.
double coherent_normalisation(double energy, const BraggPeakList& peaks, const GaussianMixtureParams& gm,
                              double hc);

/// Single-scatter transport along the slice line.
Tally mc_run(const McConfig& cfg, const ScannerConfig& scanner, MaterialLibrary& materials);

}  // namespace bst
