// bst: command-line front end for the Bragg scatter tomography toolkit.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bst/array_io.hpp"
#include "bst/config.hpp"
#include "bst/errors.hpp"
#include "bst/experiment.hpp"
#include "bst/metrics.hpp"
#include "bst/parallel.hpp"
#include "bst/phantom.hpp"
#include "bst/sinogram.hpp"

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out;
};

bst::ExperimentConfig load(const Globals& g) {
  bst::ExperimentConfig cfg;
  if (!g.config.empty()) {
    try {
      cfg = bst::load_config(g.config);
    } catch (const bst::Error& e) {
      throw bst::ConfigError(g.config + ": " + e.what());
    }
  } else {
    cfg.materials_dir = fs::path(BST_DEFAULT_MATERIALS_DIR);
  }
  if (g.seed) {
    cfg.data.seed = *g.seed;
    cfg.mc.seed = *g.seed;
  }
  if (g.threads) cfg.threads = *g.threads;
  if (!g.out.empty()) cfg.output_dir = g.out;
  if (cfg.threads > 0) bst::set_threads(cfg.threads);
  return cfg;
}

std::ofstream open_csv(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw bst::IoError("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

void write_truth_and_sinogram(const bst::ExperimentConfig& cfg, const bst::DataBundle& d,
                              const bst::MaterialLibrary& materials, const bst::ImageGrid& grid) {
  fs::create_directories(cfg.output_dir);
  bst::write_sinogram(cfg.output_dir / "sinogram", d.raw);
  if (!cfg.phantom.objects.empty())
    bst::write_matrix(cfg.output_dir / "truth.bsta", bst::ground_truth(cfg, grid, materials));
  if (d.tally) bst::write_tally(cfg.output_dir, *d.tally);
}

int cmd_build_op(const Globals& g) {
  const auto cfg = load(g);
  cfg.validate();
  const auto A = bst::build_operator(cfg, false);
  bst::write_operator(cfg.output_dir / "operator", A);
  std::printf("operator %zu x %zu, %zu nonzeros -> %s\n", A.rows(), A.cols(), A.matrix().nnz(),
              (cfg.output_dir / "operator").string().c_str());
  return 0;
}

int cmd_sim(const Globals& g, bst::DataSource source, std::optional<double> eta_c) {
  auto cfg = load(g);
  cfg.data.source = source;
  if (eta_c) cfg.data.eta_c = *eta_c;
  cfg.validate();
  auto materials = bst::load_materials(cfg);
  const auto A = source == bst::DataSource::analytic
                     ? bst::build_support_operator(cfg, bst::ground_truth(cfg, cfg.grid.make(), materials))
                     : bst::build_operator(cfg, false);
  const auto d = bst::make_data(cfg, A, materials);
  write_truth_and_sinogram(cfg, d, materials, A.grid());
  double total = 0.0;
  for (double v : d.raw.values) total += v;
  std::printf("sinogram %zu rows, %.0f counts", d.raw.size(), total);
  if (d.clean) std::printf(", eta_ls %.4f", bst::relative_ls_error(*d.clean, d.raw.values));
  std::printf(" -> %s\n", (cfg.output_dir / "sinogram.bsta").string().c_str());
  if (d.tally)
    std::printf("launched %llu scattered %llu absorbed %llu transmitted %llu escaped %llu\n",
                static_cast<unsigned long long>(d.tally->launched), static_cast<unsigned long long>(d.tally->scattered),
                static_cast<unsigned long long>(d.tally->absorbed),
                static_cast<unsigned long long>(d.tally->transmitted),
                static_cast<unsigned long long>(d.tally->escaped));
  return 0;
}

int cmd_filter(const Globals& g, const std::string& input, bool csv) {
  auto cfg = load(g);
  const auto s = bst::read_sinogram(input);
  const auto f = bst::filter(s);
  fs::create_directories(cfg.output_dir);
  bst::write_sinogram(cfg.output_dir / "sinogram_filtered", f);
  if (csv) bst::export_csv(cfg.output_dir / "sinogram_filtered.csv", f);
  std::printf("filtered %zu rows -> %s\n", f.size(), (cfg.output_dir / "sinogram_filtered.bsta").string().c_str());
  return 0;
}

int cmd_recon(const Globals& g, const std::string& data, const std::string& method, std::optional<double> lambda,
              bool two_stage) {
  auto cfg = load(g);
  cfg.validate();
  auto materials = bst::load_materials(cfg);
  const auto A0 = bst::build_operator(cfg);
  bst::Sinogram s;
  if (!data.empty()) {
    s = bst::read_sinogram(data);
    if (s.row_index != A0.row_index()) throw bst::ConfigError(data + ": rows do not match the scanner");
  } else {
    s = bst::make_data(cfg, A0, materials).raw;
  }
  const auto b = s.provenance == bst::Provenance::filtered ? s : bst::filter(s);
  const auto A = bst::scale_to_data(A0, b);
  bst::ReconParams p = cfg.recon.params;
  p.lambda = lambda ? *lambda : (method == "ftv" ? cfg.recon.lambdas_ftv.front() : cfg.recon.lambdas_2dbsr.front());
  bst::ReconResult r;
  if (method == "ftv") {
    r = bst::run_ftv(b, A, p);
  } else {
    const auto library = cfg.library.make(A.grid());
    r = two_stage ? bst::run_two_stage(b, library, A, p) : bst::run_2dbsr(b, library, A, p);
  }
  bst::write_recon(cfg.output_dir, method, r);
  std::printf("%s lambda %g: %zu trace points, final objective %.10g", method.c_str(), p.lambda, r.trace.size(),
              r.trace.empty() ? NAN : r.trace.back().objective);
  if (!cfg.phantom.objects.empty())
    std::printf(", edge F1 %.4f",
                bst::edge_f1(bst::ground_truth(cfg, A.grid(), materials), r.image, cfg.recon.edge_tau));
  std::printf("\n");
  return 0;
}

int cmd_score(const Globals& g, const std::string& truth, const std::string& image, double tau,
              const std::string& method) {
  auto cfg = load(g);
  const auto t = bst::read_matrix(truth);
  const auto r = bst::read_matrix(image);
  if (t.rows != r.rows || t.cols != r.cols) throw bst::DimensionError("score: image shapes differ");
  const double f1 = bst::edge_f1(t, r, tau);
  fs::create_directories(cfg.output_dir);
  bst::write_results_csv(cfg.output_dir / "score.csv", cfg.name, {{method, 1, NAN, f1, NAN}});
  std::printf("edge F1 %.6f\n", f1);
  return 0;
}

int cmd_report(const Globals& g) {
  auto cfg = load(g);
  cfg.validate();
  auto materials = bst::load_materials(cfg);
  const auto dir = cfg.output_dir / "report";
  fs::create_directories(dir);
  const auto& sc = cfg.scanner;

  {
    auto out = open_csv(dir / "psi.csv");
    out << "E_keV,psi\n";
    for (double e : sc.energies) out << e << ',' << bst::psi(e, sc.min_energy(), sc.max_energy()) << '\n';
  }
  const auto grid = cfg.grid.make();
  for (const auto& o : cfg.phantom.objects) {
    const auto& m = materials.get(o.material);
    if (m.peaks.peaks.empty()) continue;
    auto out = open_csv(dir / ("F_" + o.material + ".csv"));
    out << "q_invA,intensity\n";
    const auto f = bst::sample_spectrum(m.peaks, materials.mixture(), grid);
    for (std::size_t i = 0; i < grid.n(); ++i) out << grid.q_values[i] << ',' << f[i] << '\n';
  }
  for (const auto& id : {std::string("NaCl"), std::string("graphite"), std::string("diamond"),
                         std::string("cellulose")}) {
    if (!fs::exists(cfg.materials_dir / (id + ".atten.csv"))) continue;
    const auto t = bst::load_attenuation_table(cfg.materials_dir / (id + ".atten.csv"), id);
    auto out = open_csv(dir / ("mu_" + id + ".csv"));
    out << "E_keV,mu_pe_per_mm,mu_inc_per_mm,mu_coh_per_mm\n";
    for (double e : sc.energies)
      out << e << ',' << t.mu(bst::Interaction::photoelectric, e) << ',' << t.mu(bst::Interaction::incoherent, e)
          << ',' << t.mu(bst::Interaction::coherent, e) << '\n';
  }
  {
    const auto A = bst::build_operator(cfg, false);
    auto out = open_csv(dir / "operator_row_sums.csv");
    out << "E_keV,s1_mm,d1_mm,row_sum\n";
    const auto& M = A.matrix();
    for (std::size_t r = 0; r < M.rows(); ++r) {
      double s = 0.0;
      for (auto k = M.row_ptr()[r]; k < M.row_ptr()[r + 1]; ++k) s += M.values()[k];
      const auto key = A.row_index().key(r);
      out << sc.energies[key.energy] << ',' << sc.source_x1[key.source] << ',' << sc.detector_x1[key.detector] << ','
          << s << '\n';
    }
  }
  if (!cfg.phantom.objects.empty()) {
    const auto truth = bst::ground_truth(cfg, grid, materials);
    bst::write_matrix(dir / "truth.bsta", truth);
    auto out = open_csv(dir / "truth_x1_profile.csv");
    out << "x1_mm,column_sum\n";
    for (std::size_t j = 0; j < grid.m(); ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < grid.n(); ++i) s += truth(i, j);
      out << grid.x1_values[j] << ',' << s << '\n';
    }
  }
  std::printf("report series -> %s\n", dir.string().c_str());
  return 0;
}

int cmd_run(const Globals& g) {
  auto cfg = load(g);
  const auto res = bst::run_experiment(cfg, true);
  for (const auto& r : res.records)
    std::printf("%-6s stage %d lambda %-10g F1 %.4f\n", r.method.c_str(), r.stage, r.lambda, r.f1);
  if (!std::isnan(res.eta_ls)) std::printf("eta_ls %.4f\n", res.eta_ls);
  std::printf("outputs -> %s\n", cfg.output_dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bragg scatter tomography toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  int threads = 0;
  app.add_option("--config", g.config, "experiment config file")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "override the data seed");
  auto* threads_opt = app.add_option("--threads", threads, "worker threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", g.out, "output directory");

  auto* build_op = app.add_subcommand("build-op", "assemble the forward operator and write it");

  auto* sim_analytic = app.add_subcommand("sim-analytic", "Poisson data from the forward model");
  double eta_c = 0.0;
  auto* eta_opt = sim_analytic->add_option("--eta-c", eta_c, "count scale")->check(CLI::PositiveNumber);

  auto* sim_mc = app.add_subcommand("sim-mc", "single-scatter Monte Carlo data");

  auto* filt = app.add_subcommand("filter", "apply the energy taper to a sinogram");
  std::string filter_in;
  bool filter_csv = false;
  filt->add_option("input", filter_in, "sinogram stem (.bsta + .json)")->required();
  filt->add_flag("--csv", filter_csv, "also export E_keV,s1_mm,d1_mm,counts");

  auto* recon = app.add_subcommand("recon", "reconstruct one lambda");
  std::string recon_data, method = "2dbsr";
  double lambda = 0.0;
  bool two_stage = false;
  recon->add_option("--data", recon_data, "sinogram stem; simulated from the config when omitted");
  recon->add_option("--method", method, "2dbsr or ftv")->check(CLI::IsMember({"2dbsr", "ftv"}));
  auto* lambda_opt = recon->add_option("--lambda", lambda, "regularisation weight")->check(CLI::PositiveNumber);
  recon->add_flag("--two-stage", two_stage, "second pass at 10 lambda");

  auto* score = app.add_subcommand("score", "edge F1 between two images");
  std::string truth, image, score_method = "image";
  double tau = 0.2;
  score->add_option("--truth", truth)->required()->check(CLI::ExistingFile);
  score->add_option("--image", image)->required()->check(CLI::ExistingFile);
  score->add_option("--tau", tau, "relative edge threshold");
  score->add_option("--method", score_method, "label for the results row");

  auto* report = app.add_subcommand("report", "CSV series for plotting");
  auto* run = app.add_subcommand("run", "full experiment: data, filter, lambda sweep, scores");

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) g.seed = seed;
  if (*threads_opt) g.threads = threads;

  try {
    if (*build_op) return cmd_build_op(g);
    if (*sim_analytic)
      return cmd_sim(g, bst::DataSource::analytic, *eta_opt ? std::optional<double>(eta_c) : std::nullopt);
    if (*sim_mc) return cmd_sim(g, bst::DataSource::monte_carlo, std::nullopt);
    if (*filt) return cmd_filter(g, filter_in, filter_csv);
    if (*recon)
      return cmd_recon(g, recon_data, method, *lambda_opt ? std::optional<double>(lambda) : std::nullopt, two_stage);
    if (*score) return cmd_score(g, truth, image, tau, score_method);
    if (*report) return cmd_report(g);
    if (*run) return cmd_run(g);
  } catch (const std::exception& e) {
    std::cerr << "bst: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
