#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bst/operator.hpp"

namespace bst {

enum class Provenance { analytic, monte_carlo, filtered, file };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

/// Measured data for one slice, ordered like the operator rows.
struct Sinogram {
  std::vector<double> values;
  RowIndex row_index;
  double slice_x2 = 0.0;
  Provenance provenance = Provenance::analytic;

  std::size_t size() const { return values.size(); }
  /// Throws when the length, finiteness or sign invariants fail.
  void validate() const;
};

/// Energy taper: 1 on [E_m, E_M/2], then -u^3 + 2u^2 with u = 2 (E_M - E) / E_M.
double psi(double energy, double e_min, double e_max);

/// Multiply every row by psi of its energy.
Sinogram filter(const Sinogram& s);

/// CSV `E_keV,s1_mm,d1_mm,counts`, one line per row.
void export_csv(const std::filesystem::path& path, const Sinogram& s);

}  // namespace bst
