#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bst/geometry.hpp"
#include "bst/materials.hpp"
#include "bst/monte_carlo.hpp"
#include "bst/operator.hpp"
#include "bst/phantom.hpp"
#include "bst/recon.hpp"

namespace bst {

struct GridConfig {
  std::size_t q_bins = 750;
  double q_min = 0.0;
  double q_max = 2.0;
  std::size_t x1_pixels = 600;
  double x1_min = -300.0;
  double x1_max = 300.0;

  ImageGrid make() const { return ImageGrid::uniform(q_bins, q_min, q_max, x1_pixels, x1_min, x1_max); }
};

struct LibraryConfig {
  double center_min = -200.0;
  double center_max = 200.0;
  double center_step = 5.0;
  double width_min = 10.0;
  double width_max = 30.0;
  double width_step = 5.0;
  /// Drop entries whose pixel support repeats an earlier one (coarse grids).
  bool merge_duplicates = true;

  std::vector<double> centers() const;
  std::vector<double> widths() const;
  CharacteristicLibrary make(const ImageGrid& grid) const;
};

enum class DataSource { analytic, monte_carlo, file };

struct DataConfig {
  DataSource source = DataSource::analytic;
  double eta_c = 10.0;
  std::uint64_t seed = 1;
  std::filesystem::path path;  ///< sinogram .bsta when source = file
};

struct ReconConfig {
  std::vector<std::string> methods{"2dbsr", "ftv"};
  std::vector<double> lambdas_2dbsr{1.0};
  std::vector<double> lambdas_ftv{1.0};
  bool two_stage = false;
  double edge_tau = 0.2;
  ReconParams params;
};

/// Everything one run needs. Loaded from a sectioned key = value file.
struct ExperimentConfig {
  std::string name = "experiment";
  ScannerConfig scanner = ScannerConfig::full_scale();
  double slice_x2 = 0.0;
  GridConfig grid;
  LibraryConfig library;
  ReconConfig recon;
  DataConfig data;
  PhantomSpec phantom;
  std::filesystem::path materials_dir;
  double sigma2 = 1e-6;
  McConfig mc;
  std::filesystem::path output_dir = "out";
  int threads = 0;

  void validate() const;
};

/// Missing keys keep their defaults; unknown keys are errors. Relative paths
/// resolve against the config file's directory.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");

/// The resolved configuration in the same format; parse_config(render_config(c)) == c.
std::string render_config(const ExperimentConfig& cfg);

std::vector<double> parse_double_list(const std::string& text);
std::vector<std::size_t> parse_index_list(const std::string& text);

}  // namespace bst
