#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bst/config.hpp"
#include "bst/monte_carlo.hpp"
#include "bst/recon.hpp"
#include "bst/sinogram.hpp"

namespace bst {

/// Materials named by the phantom (and clutter), loaded from the configured directory.
MaterialLibrary load_materials(const ExperimentConfig& cfg);

BraggOperator build_operator(const ExperimentConfig& cfg, bool store_transpose = true);

/// Operator restricted to the x1 columns where `image` is nonzero. Forward
/// projections of `image` through it equal those through the full operator.
BraggOperator build_support_operator(const ExperimentConfig& cfg, const Matrix& image);

/// A multiplied by sum(b) / sum(A 1), so an all-ones image predicts the observed total.
BraggOperator scale_to_data(const BraggOperator& A, const Sinogram& b);

/// Ground-truth image on the grid (spheres enter through their chord on the slice).
Matrix ground_truth(const ExperimentConfig& cfg, const ImageGrid& grid, const MaterialLibrary& materials);

struct DataBundle {
  Sinogram raw;
  std::optional<std::vector<double>> clean;  ///< noiseless mean when known
  std::optional<Tally> tally;
};

DataBundle make_data(const ExperimentConfig& cfg, const BraggOperator& A, MaterialLibrary& materials);

struct RunRecord {
  std::string method;
  int stage = 1;
  double lambda = 0.0;
  double f1 = 0.0;
  double eta_ls = 0.0;
};

struct ExperimentResult {
  std::vector<RunRecord> records;
  std::map<std::string, ReconResult> best;  ///< by method, highest F1 over the sweep
  Matrix truth;
  double eta_ls = 0.0;
};

/// Operator, data, filter, lambda sweep, scoring. Writes into cfg.output_dir when `write`.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write = true);

// Artifact I/O.

void write_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix(const std::filesystem::path& path);

/// `<stem>.bsta` (E, S, D) plus `<stem>.json` with the row index map.
void write_sinogram(const std::filesystem::path& stem, const Sinogram& s);
Sinogram read_sinogram(const std::filesystem::path& stem);

/// CSR arrays and a JSON sidecar in `dir`.
void write_operator(const std::filesystem::path& dir, const BraggOperator& A);
BraggOperator read_operator(const std::filesystem::path& dir, bool store_transpose = true);

void write_tally(const std::filesystem::path& dir, const Tally& t);

void write_trace_csv(const std::filesystem::path& path, const std::vector<TracePoint>& trace);
void write_results_csv(const std::filesystem::path& path, const std::string& experiment,
                       const std::vector<RunRecord>& records);
void write_recon(const std::filesystem::path& dir, const std::string& prefix, const ReconResult& r);

}  // namespace bst
