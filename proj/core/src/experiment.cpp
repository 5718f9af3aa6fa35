#include "bst/experiment.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "bst/array_io.hpp"
#include "bst/errors.hpp"
#include "bst/metrics.hpp"
#include "bst/parallel.hpp"
#include "bst/phantom.hpp"

namespace bst {

using nlohmann::json;

namespace {

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

json row_index_json(const RowIndex& r) {
  return {{"energies_keV", r.energies}, {"source_x1_mm", r.source_x1}, {"detector_x1_mm", r.detector_x1},
          {"row_order", "energy, source, detector"}};
}

RowIndex row_index_from(const json& j) {
  RowIndex r;
  r.energies = j.at("energies_keV").get<std::vector<double>>();
  r.source_x1 = j.at("source_x1_mm").get<std::vector<double>>();
  r.detector_x1 = j.at("detector_x1_mm").get<std::vector<double>>();
  return r;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

}  // namespace

MaterialLibrary load_materials(const ExperimentConfig& cfg) {
  MaterialLibrary lib(cfg.materials_dir, GaussianMixtureParams{cfg.sigma2});
  for (const auto& o : cfg.phantom.objects) lib.load(o.material);
  if (cfg.phantom.clutter) lib.load(cfg.phantom.clutter->material);
  return lib;
}

BraggOperator build_operator(const ExperimentConfig& cfg, bool store_transpose) {
  BuildOptions opt;
  opt.store_transpose = store_transpose;
  return build_operator(cfg.scanner, cfg.grid.make(), cfg.slice_x2, opt);
}

BraggOperator build_support_operator(const ExperimentConfig& cfg, const Matrix& image) {
  BuildOptions opt;
  opt.store_transpose = false;
  opt.x1_mask.assign(image.cols, false);
  for (std::size_t j = 0; j < image.cols; ++j)
    for (double v : image.col(j))
      if (v != 0.0) {
        opt.x1_mask[j] = true;
        break;
      }
  return build_operator(cfg.scanner, cfg.grid.make(), cfg.slice_x2, opt);
}

BraggOperator scale_to_data(const BraggOperator& A, const Sinogram& b) {
  const std::vector<double> ones(A.cols(), 1.0);
  const double model = deterministic_sum(A.apply(ones));
  const double data = deterministic_sum(b.values);
  if (!(model > 0.0) || !(data > 0.0)) return A.scaled(1.0);
  return A.scaled(data / model);
}

Matrix ground_truth(const ExperimentConfig& cfg, const ImageGrid& grid, const MaterialLibrary& materials) {
  return make_phantom_image(cfg.phantom, grid, materials).image;
}

DataBundle make_data(const ExperimentConfig& cfg, const BraggOperator& A, MaterialLibrary& materials) {
  switch (cfg.data.source) {
    case DataSource::analytic: {
      const Matrix truth = ground_truth(cfg, A.grid(), materials);
      DataBundle d{analytic_data(A, truth, cfg.data.eta_c, cfg.data.seed), analytic_mean(A, truth, cfg.data.eta_c),
                   std::nullopt};
      return d;
    }
    case DataSource::monte_carlo: {
      McConfig mc = cfg.mc;
      mc.phantom = cfg.phantom;
      mc.seed = cfg.data.seed;
      Tally t = mc_run(mc, cfg.scanner, materials);
      DataBundle d{t.to_sinogram(cfg.scanner, cfg.slice_x2), std::nullopt, std::nullopt};
      std::vector<double> expected(t.coherent_expected.size());
      for (std::size_t k = 0; k < expected.size(); ++k) expected[k] = t.coherent_expected[k] + t.compton_expected[k];
      d.clean = std::move(expected);
      d.tally = std::move(t);
      return d;
    }
    case DataSource::file: {
      DataBundle d{read_sinogram(cfg.data.path), std::nullopt, std::nullopt};
      if (d.raw.row_index != A.row_index()) throw ConfigError("data file rows do not match the scanner");
      return d;
    }
  }
  throw ConfigError("unknown data source");
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write) {
  cfg.validate();
  if (cfg.threads > 0) set_threads(cfg.threads);
  MaterialLibrary materials = load_materials(cfg);
  const BraggOperator A0 = build_operator(cfg);
  const ImageGrid& grid = A0.grid();
  const CharacteristicLibrary library = cfg.library.make(grid);

  DataBundle data = make_data(cfg, A0, materials);
  const Sinogram b = filter(data.raw);
  const BraggOperator A = scale_to_data(A0, b);

  ExperimentResult res;
  res.truth = ground_truth(cfg, grid, materials);
  const double clean_norm = data.clean ? deterministic_dot(*data.clean, *data.clean) : 0.0;
  res.eta_ls = clean_norm > 0.0 ? relative_ls_error(*data.clean, data.raw.values)
                                : std::numeric_limits<double>::quiet_NaN();
  const double tau = cfg.recon.edge_tau;
  const bool truth_known = !cfg.phantom.objects.empty();
  auto score = [&](const Matrix& image) {
    return truth_known ? edge_f1(res.truth, image, tau) : std::numeric_limits<double>::quiet_NaN();
  };
  auto better = [](double f1, const ReconResult* current, double current_f1) {
    return current == nullptr || (!std::isnan(f1) && (std::isnan(current_f1) || f1 > current_f1));
  };

  for (const auto& method : cfg.recon.methods) {
    const auto& lambdas = method == "2dbsr" ? cfg.recon.lambdas_2dbsr : cfg.recon.lambdas_ftv;
    double best_f1 = std::numeric_limits<double>::quiet_NaN();
    const ReconResult* best = nullptr;
    std::vector<ReconResult> runs;
    runs.reserve(lambdas.size());
    for (double lambda : lambdas) {
      ReconParams p = cfg.recon.params;
      p.lambda = lambda;
      if (method == "2dbsr" && cfg.recon.two_stage) {
        ReconResult first;
        runs.push_back(run_two_stage(b, library, A, p, &first));
        res.records.push_back({method, 1, lambda, score(first.image), res.eta_ls});
      } else if (method == "2dbsr") {
        runs.push_back(run_2dbsr(b, library, A, p));
      } else {
        runs.push_back(run_ftv(b, A, p));
      }
      const double f1 = score(runs.back().image);
      res.records.push_back({method, runs.back().stage, lambda, f1, res.eta_ls});
      if (better(f1, best, best_f1)) {
        best = &runs.back();
        best_f1 = f1;
      }
    }
    res.best[method] = *best;
  }

  if (!write) return res;
  const auto& dir = cfg.output_dir;
  std::filesystem::create_directories(dir);
  write_sinogram(dir / "sinogram", data.raw);
  write_sinogram(dir / "sinogram_filtered", b);
  write_matrix(dir / "truth.bsta", res.truth);
  if (data.tally) write_tally(dir, *data.tally);
  for (const auto& [method, r] : res.best) write_recon(dir, method, r);
  write_results_csv(dir / "results.csv", cfg.name, res.records);

  ExperimentConfig echoed = cfg;
  echoed.threads = 0;
  json manifest = {{"experiment", cfg.name},
                   {"config", render_config(echoed)},
                   {"seed", cfg.data.seed},
                   {"eta_ls", std::isnan(res.eta_ls) ? json(nullptr) : json(res.eta_ls)},
                   {"operator_scale_note", "operator scaled so that A*1 sums to the filtered counts"}};
  json best = json::object();
  for (const auto& [method, r] : res.best) best[method] = {{"lambda", r.lambda}, {"stage", r.stage}};
  manifest["best"] = best;
  write_json(dir / "manifest.json", manifest);
  return res;
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  const std::vector<std::uint64_t> dims{m.rows, m.cols};
  write_array(path, dims, std::span<const double>(m.row_major()));
}

Matrix read_matrix(const std::filesystem::path& path) {
  const Array a = read_array(path);
  if (a.type != ElementType::f64 || a.dims.size() != 2) throw IoError(path.string() + ": expected a 2-D float64 array");
  return Matrix::from_row_major(a.dims[0], a.dims[1], a.f64);
}

void write_sinogram(const std::filesystem::path& stem, const Sinogram& s) {
  s.validate();
  const auto& r = s.row_index;
  const std::vector<std::uint64_t> dims{r.energies.size(), r.source_x1.size(), r.detector_x1.size()};
  auto p = stem;
  write_array(p.replace_extension(".bsta"), dims, std::span<const double>(s.values));
  json j = {{"kind", "sinogram"}, {"slice_x2_mm", s.slice_x2}, {"provenance", to_string(s.provenance)},
            {"rows", row_index_json(r)}};
  write_json(p.replace_extension(".json"), j);
}

Sinogram read_sinogram(const std::filesystem::path& stem) {
  auto p = stem;
  const json j = read_json(p.replace_extension(".json"));
  Sinogram s;
  try {
    s.row_index = row_index_from(j.at("rows"));
    s.slice_x2 = j.at("slice_x2_mm").get<double>();
    s.provenance = provenance_from_string(j.at("provenance").get<std::string>());
  } catch (const json::exception& e) {
    throw IoError(p.string() + ": " + e.what());
  }
  const Array a = read_array(p.replace_extension(".bsta"));
  if (a.type != ElementType::f64) throw IoError(p.string() + ": sinogram must be float64");
  s.values = a.f64;
  s.validate();
  return s;
}

void write_operator(const std::filesystem::path& dir, const BraggOperator& A) {
  std::filesystem::create_directories(dir);
  const auto& M = A.matrix();
  const std::vector<std::uint64_t> ptr_dims{M.row_ptr().size()};
  const std::vector<std::uint64_t> nnz_dims{M.nnz()};
  write_array(dir / "operator_rowptr.bsta", ptr_dims, std::span<const std::uint64_t>(M.row_ptr()));
  const std::vector<std::uint64_t> cols(M.col_idx().begin(), M.col_idx().end());
  write_array(dir / "operator_colidx.bsta", nnz_dims, std::span<const std::uint64_t>(cols));
  write_array(dir / "operator_values.bsta", nnz_dims, std::span<const double>(M.values()));
  const auto& g = A.grid();
  json j = {{"kind", "bragg_operator"},
            {"rows", M.rows()},
            {"cols", M.cols()},
            {"nnz", M.nnz()},
            {"slice_x2_mm", A.slice_x2()},
            {"row_index", row_index_json(A.row_index())},
            {"grid", {{"q_invA", g.q_values}, {"x1_mm", g.x1_values}, {"column_order", "x1 major: col = j * n + i"}}}};
  write_json(dir / "operator.json", j);
}

BraggOperator read_operator(const std::filesystem::path& dir, bool store_transpose) {
  const json j = read_json(dir / "operator.json");
  RowIndex rows;
  ImageGrid grid;
  double x2 = 0.0;
  try {
    rows = row_index_from(j.at("row_index"));
    grid.q_values = j.at("grid").at("q_invA").get<std::vector<double>>();
    grid.x1_values = j.at("grid").at("x1_mm").get<std::vector<double>>();
    x2 = j.at("slice_x2_mm").get<double>();
  } catch (const json::exception& e) {
    throw IoError((dir / "operator.json").string() + ": " + e.what());
  }
  const Array ptr = read_array(dir / "operator_rowptr.bsta");
  const Array idx = read_array(dir / "operator_colidx.bsta");
  const Array val = read_array(dir / "operator_values.bsta");
  if (ptr.type != ElementType::u64 || idx.type != ElementType::u64 || val.type != ElementType::f64)
    throw IoError(dir.string() + ": operator arrays have the wrong element types");
  std::vector<std::uint32_t> cols(idx.u64.size());
  for (std::size_t k = 0; k < cols.size(); ++k) {
    if (idx.u64[k] > std::numeric_limits<std::uint32_t>::max()) throw IoError("operator column index overflow");
    cols[k] = static_cast<std::uint32_t>(idx.u64[k]);
  }
  CsrMatrix M(rows.size(), grid.size(), ptr.u64, std::move(cols), val.f64);
  return BraggOperator(rows, grid, x2, std::move(M), store_transpose);
}

void write_tally(const std::filesystem::path& dir, const Tally& t) {
  std::filesystem::create_directories(dir);
  const std::vector<std::uint64_t> dims{t.energies, t.sources, t.detectors};
  write_array(dir / "tally_coherent.bsta", dims, std::span<const std::uint64_t>(t.coherent));
  write_array(dir / "tally_compton.bsta", dims, std::span<const std::uint64_t>(t.compton));
  json j = {{"kind", "mc_tally"},
            {"channels", {"coherent", "compton"}},
            {"dims", {"scattered_energy_bin", "source", "detector"}},
            {"launched", t.launched},
            {"scattered", t.scattered},
            {"absorbed", t.absorbed},
            {"transmitted", t.transmitted},
            {"escaped", t.escaped}};
  write_json(dir / "tally.json", j);
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TracePoint>& trace) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "iter,objective,stage\n";
  for (const auto& t : trace) out << t.iter << ',' << fmt(t.objective) << ',' << t.stage << '\n';
}

void write_results_csv(const std::filesystem::path& path, const std::string& experiment,
                       const std::vector<RunRecord>& records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "experiment,method,stage,f1,eta_ls,lambda\n";
  for (const auto& r : records)
    out << experiment << ',' << r.method << ',' << r.stage << ',' << fmt(r.f1) << ',' << fmt(r.eta_ls) << ','
        << fmt(r.lambda) << '\n';
}

void write_recon(const std::filesystem::path& dir, const std::string& prefix, const ReconResult& r) {
  std::filesystem::create_directories(dir);
  write_matrix(dir / (prefix + "_image.bsta"), r.image);
  if (!r.a.empty()) {
    const std::vector<std::uint64_t> dims{r.a.size()};
    write_array(dir / (prefix + "_a.bsta"), dims, std::span<const double>(r.a));
    write_matrix(dir / (prefix + "_Y.bsta"), r.Y);
  }
  write_trace_csv(dir / (prefix + "_trace.csv"), r.trace);
}

}  // namespace bst
