#include "bst/sinogram.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "bst/errors.hpp"

namespace bst {

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::analytic: return "analytic";
    case Provenance::monte_carlo: return "monte_carlo";
    case Provenance::filtered: return "filtered";
    case Provenance::file: return "file";
  }
  return "unknown";
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "analytic") return Provenance::analytic;
  if (s == "monte_carlo") return Provenance::monte_carlo;
  if (s == "filtered") return Provenance::filtered;
  if (s == "file") return Provenance::file;
  throw ConfigError("unknown sinogram provenance '" + s + "'");
}

void Sinogram::validate() const {
  if (values.size() != row_index.size())
    throw DimensionError("Sinogram: " + std::to_string(values.size()) + " values for " +
                         std::to_string(row_index.size()) + " rows");
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError("Sinogram: non-finite value");
    if (v < 0.0) throw DomainError("Sinogram: negative value");
  }
}

double psi(double energy, double e_min, double e_max) {
  if (!(e_min > 0.0 && e_min < 0.5 * e_max))
    throw ConfigError("psi: requires 0 < E_m < E_M / 2");
  if (!(energy >= e_min && energy <= e_max)) throw DomainError("psi: energy outside [E_m, E_M]");
  if (energy <= 0.5 * e_max) return 1.0;
  const double u = 2.0 * (e_max - energy) / e_max;
  return -u * u * u + 2.0 * u * u;
}

Sinogram filter(const Sinogram& s) {
  s.validate();
  if (s.provenance == Provenance::filtered) throw ConfigError("filter: sinogram is already filtered");
  const auto& energies = s.row_index.energies;
  const double e_min = energies.front();
  const double e_max = energies.back();
  std::vector<double> weight(energies.size());
  for (std::size_t e = 0; e < energies.size(); ++e) weight[e] = psi(energies[e], e_min, e_max);

  Sinogram out = s;
  const std::size_t per_energy = s.row_index.source_x1.size() * s.row_index.detector_x1.size();
  for (std::size_t r = 0; r < out.values.size(); ++r) out.values[r] *= weight[r / per_energy];
  out.provenance = Provenance::filtered;
  return out;
}

void export_csv(const std::filesystem::path& path, const Sinogram& s) {
  s.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "E_keV,s1_mm,d1_mm,counts\n" << std::setprecision(17);
  for (std::size_t r = 0; r < s.values.size(); ++r) {
    const auto k = s.row_index.key(r);
    out << s.row_index.energies[k.energy] << ',' << s.row_index.source_x1[k.source] << ','
        << s.row_index.detector_x1[k.detector] << ',' << s.values[r] << '\n';
  }
}

}  // namespace bst
