// Acceptance suite: one PASS/FAIL line per criterion. Arguments select criteria by number.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bst/config.hpp"
#include "bst/experiment.hpp"
#include "bst/metrics.hpp"
#include "bst/monte_carlo.hpp"
#include "bst/parallel.hpp"
#include "bst/phantom.hpp"
#include "bst/recon.hpp"
#include "bst/sinogram.hpp"
#include "oracles.hpp"

using namespace bst;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kGradientTol = 1e-5;
constexpr int kGradientPoints = 10;
constexpr double kPsiTol = 1e-15;
constexpr int kCalibrationSeeds = 20;
constexpr double kEtaHighLo = 0.10, kEtaHighHi = 0.20;  // eta_c = 10
constexpr double kEtaLowLo = 0.40, kEtaLowHi = 0.60;    // eta_c = 1
constexpr double kDeskF1 = 0.60;
constexpr double kDeskMargin = 0.05;
constexpr double kDeskMinutes = 30.0;
constexpr double kMcSigmas = 3.0;
constexpr double kMcPhotons = 1e6;
constexpr double kBinaryTol = 0.05;
constexpr double kTraceTol = 1e-8;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "bst_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Sinogram as_data(const test::SmallInstance& s, std::vector<double> values) {
  return {std::move(values), s.A.row_index(), 0.0, Provenance::filtered};
}

// Stage boundaries change lambda, so consecutive points are compared within a stage.
bool trace_monotone(const std::vector<TracePoint>& trace) {
  for (std::size_t k = 1; k < trace.size(); ++k) {
    if (trace[k].stage != trace[k - 1].stage) continue;
    if (trace[k].objective - trace[k - 1].objective > kTraceTol * std::abs(trace[k - 1].objective)) return false;
  }
  return true;
}

bool binarised(const std::vector<double>& a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return v <= kBinaryTol || v >= 1.0 - kBinaryTol; });
}

bool disjoint(const ReconResult& r, const CharacteristicLibrary& lib) {
  const auto G = gram(lib);
  const auto act = r.active_set();
  for (std::size_t u = 0; u < act.size(); ++u)
    for (std::size_t v = u + 1; v < act.size(); ++v)
      if (G(act[u], act[v]) != 0.0) return false;
  return true;
}

ReconParams small_params() {
  ReconParams p;
  p.lambda = 1e-3;
  p.n1 = 20;
  p.n2 = 50;
  return p;
}

// Shared results between criteria.
struct Shared {
  bool desk_done = false;
  ExperimentResult desk;
  CharacteristicLibrary desk_library;
  std::vector<ReconResult> small_runs;
  std::vector<CharacteristicLibrary> small_libraries;
  std::vector<std::vector<TracePoint>> mc_traces;
};
Shared shared;

const ExperimentResult& desk_run(double* seconds = nullptr) {
  if (!shared.desk_done) {
    auto cfg = load_config(fs::path(BST_TEST_CONFIG_DIR) / "desk_phantom1.ini");
    const auto t0 = std::chrono::steady_clock::now();
    shared.desk = run_experiment(cfg, false);
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (seconds) *seconds = dt;
    shared.desk_library = cfg.library.make(cfg.grid.make());
    shared.desk_done = true;
  }
  return shared.desk;
}

double best_f1(const ExperimentResult& r, const std::string& method, int stage = 0) {
  double best = -1.0;
  for (const auto& rec : r.records)
    if (rec.method == method && (stage == 0 || rec.stage == stage)) best = std::max(best, rec.f1);
  return best;
}

// 1. Gradients against central differences.
Outcome gradients() {
  Outcome o;
  const auto s = test::gradient_instance();
  std::mt19937_64 rng(11);
  std::vector<double> b(s.clean.size());
  for (std::size_t k = 0; k < b.size(); ++k) b[k] = std::poisson_distribution<int>(s.clean[k] + 0.5)(rng);
  ReconParams p;
  p.lambda = 0.3;
  p.alpha = 2.0;
  p.gamma = 5.0;
  ReconParams stiff = p;
  stiff.alpha = 1e6;
  stiff.gamma = 1e10;
  double worst_y = 0.0, worst_a = 0.0, worst_a_stiff = 0.0, worst_ftv = 0.0;
  for (int t = 0; t < kGradientPoints; ++t) {
    const auto a = test::uniform_vector(rng, s.library.size(), 0.05, 0.95);
    Matrix Y(s.grid.n(), s.library.size());
    Y.data = test::uniform_vector(rng, Y.data.size(), 0.1, 2.0);
    const auto gy = grad_y(a, Y, s.A, s.library, b, p);
    const auto fdy = test::fd_gradient(
        [&](const std::vector<double>& y) {
          Matrix M = Y;
          M.data = y;
          return objective_total(a, M, s.A, s.library, b, p);
        },
        Y.data);
    worst_y = std::max(worst_y, test::relative_error(gy.data, fdy));
    for (const auto* q : {&p, &stiff}) {
      const auto ga = grad_a(a, Y, s.A, s.library, b, *q);
      const auto fda = test::fd_gradient(
          [&](const std::vector<double>& x) { return objective_total(x, Y, s.A, s.library, b, *q); }, a);
      (q == &p ? worst_a : worst_a_stiff) = std::max(q == &p ? worst_a : worst_a_stiff,
                                                     test::relative_error(ga, fda));
    }
    Matrix img(s.grid.n(), s.grid.m());
    img.data = test::uniform_vector(rng, img.data.size(), 0.05, 1.5);
    Matrix g;
    ftv_objective_grad(img, s.A, b, 0.4, 1e-2, 1e-12, &g);
    const auto fd = test::fd_gradient(
        [&](const std::vector<double>& x) {
          Matrix M = img;
          M.data = x;
          return ftv_objective_grad(M, s.A, b, 0.4, 1e-2, 1e-12, nullptr);
        },
        img.data);
    worst_ftv = std::max(worst_ftv, test::relative_error(g.data, fd));
  }
  o.require(worst_y < kGradientTol, "grad_y " + fmt("%.2e", worst_y));
  o.require(worst_a < kGradientTol, "grad_a " + fmt("%.2e", worst_a));
  o.require(worst_a_stiff < kGradientTol, "grad_a(alpha=1e6,gamma=1e10) " + fmt("%.2e", worst_a_stiff));
  o.require(worst_ftv < kGradientTol, "ftv " + fmt("%.2e", worst_ftv));
  return o;
}

// 2. Spectral filter values.
Outcome filter_values() {
  Outcome o;
  double worst = 0.0;
  bool monotone = true;
  for (double em : {1.0, 5.0}) {
    const double eM = 29.0;
    worst = std::max(worst, std::abs(psi(eM, em, eM)));
    worst = std::max(worst, std::abs(psi(0.75 * eM, em, eM) - 0.375));
    for (double e = em; e <= 0.5 * eM; e += 0.25) worst = std::max(worst, std::abs(psi(e, em, eM) - 1.0));
    worst = std::max(worst, std::abs(psi(0.5 * eM, em, eM) - 1.0));
    double prev = 1.0;
    for (int k = 0; k <= 10000; ++k) {
      const double e = 0.5 * eM + 0.5 * eM * k / 10000.0;
      const double v = psi(std::min(e, eM), em, eM);
      if (v > prev) monotone = false;
      prev = v;
    }
  }
  o.require(worst <= kPsiTol, "max deviation " + fmt("%.1e", worst));
  o.require(monotone, "non-increasing on the upper half");
  return o;
}

// 3. Noise level against the count scale.
Outcome calibration() {
  Outcome o;
  auto cfg = load_config(fs::path(BST_TEST_CONFIG_DIR) / "full_phantom1.ini");
  auto materials = load_materials(cfg);
  const auto grid = cfg.grid.make();
  const auto truth = ground_truth(cfg, grid, materials);
  const auto A = build_support_operator(cfg, truth);
  for (const auto& [eta_c, lo, hi] : {std::tuple{10.0, kEtaHighLo, kEtaHighHi}, std::tuple{1.0, kEtaLowLo, kEtaLowHi}}) {
    const auto mean = analytic_mean(A, truth, eta_c);
    double mn = 1e300, mx = -1e300;
    for (int seed = 1; seed <= kCalibrationSeeds; ++seed) {
      const auto d = analytic_data(A, truth, eta_c, static_cast<std::uint64_t>(seed));
      const double e = relative_ls_error(mean, d.values);
      mn = std::min(mn, e);
      mx = std::max(mx, e);
    }
    o.require(mn >= lo && mx <= hi, "eta_c=" + fmt("%g", eta_c) + " eta_ls in [" + fmt("%.4f", mn) + ", " +
                                         fmt("%.4f", mx) + "] (p=" + std::to_string(A.rows()) + ")");
  }
  return o;
}

// 4. Desk-scale analytic run.
Outcome desk() {
  Outcome o;
  double seconds = 0.0;
  const auto& r = desk_run(&seconds);
  const double f_bsr = best_f1(r, "2dbsr");
  const double f_ftv = best_f1(r, "ftv");
  o.require(f_bsr >= kDeskF1, "2dbsr F1 " + fmt("%.3f", f_bsr));
  o.require(f_bsr >= f_ftv - kDeskMargin, "ftv F1 " + fmt("%.3f", f_ftv));
  o.require(seconds <= kDeskMinutes * 60.0, "runtime " + fmt("%.0f s", seconds));
  return o;
}

// 5. Monte Carlo against the forward operator and physical trends.
bool conserved(const Tally& t) { return t.scattered + t.absorbed + t.transmitted + t.escaped == t.launched; }

// Integral over the sphere of F(q(omega)) P(omega) dOmega by the midpoint rule in omega.
double coherent_norm_oracle(double energy, const BraggPeakList& peaks, const GaussianMixtureParams& gm, double hc) {
  const int steps = 400000;
  const double dw = std::numbers::pi / steps;
  double acc = 0.0;
  for (int k = 0; k < steps; ++k) {
    const double w = (k + 0.5) * dw;
    const double q = energy / hc * std::sin(0.5 * w);
    const double c = std::cos(w);
    acc += mixture_value(q, peaks, gm) * 0.5 * (1.0 + c * c) * 2.0 * std::numbers::pi * std::sin(w);
  }
  return acc * dw;
}

Outcome monte_carlo() {
  Outcome o;
  bool all_conserved = true;

  {  // (a) single peak, no attenuation, coherent only.
    const GaussianMixtureParams gm{1e-4};
    MaterialLibrary lib(fs::path(BST_TEST_DATA_DIR) / "materials", gm);
    Material peak;
    peak.peaks.material_id = "peak";
    peak.peaks.peaks = {{0.4, 1.0}};
    normalize(peak.peaks, gm);
    std::vector<AttenuationRow> rows;
    for (int e = 1; e <= 30; ++e) rows.push_back({static_cast<double>(e), 0.0, 0.0, 0.5});
    peak.attenuation = AttenuationTable("peak", rows);
    lib.add("peak", peak);

    auto scanner = ScannerConfig::full_scale();
    scanner.source_x1 = {-100, -50, 0, 50, 100};
    scanner.detector_x1 = lattice(-297.5, 5, 120);
    scanner.energies = {20, 24, 28};

    McConfig mc;
    mc.photons_per_projection_per_energy = kMcPhotons;
    mc.histories = static_cast<std::uint64_t>(kMcPhotons);
    mc.attenuation = false;
    mc.toggles = {false, false, true};
    mc.phantom.objects = {{"peak", ShapeKind::sphere, 0.0, 10.0, 1.0}};
    const auto t = mc_run(mc, scanner, lib);
    all_conserved = all_conserved && conserved(t);

    const double r = 10.0;
    const auto grid = ImageGrid::uniform(2000, 0.0, 2.0, 1200, -299.75, 300.25);
    BuildOptions opt;
    opt.x1_mask.assign(grid.m(), false);
    for (std::size_t j = 0; j < grid.m(); ++j) opt.x1_mask[j] = std::abs(grid.x1_values[j]) < r;
    opt.store_transpose = false;
    const auto A = build_operator(scanner, grid, 0.0, opt);
    Matrix img(grid.n(), grid.m());
    for (std::size_t j = 0; j < grid.m(); ++j)
      if (opt.x1_mask[j])
        for (std::size_t i = 0; i < grid.n(); ++i) img(i, j) = mixture_value(grid.q_values[i], peak.peaks, gm);
    const auto mu = A.apply(img.data);

    const double h = scanner.w_x2;
    const double p_coh = 1.0 - std::exp(-0.5 * mc.step);
    const auto idx = RowIndex::from(scanner);
    int bins = 0, inside = 0;
    double total_pred = 0.0, total_count = 0.0, worst = 0.0;
    double total_expected = 0.0;
    for (double v : t.coherent_expected) total_expected += v;
    for (std::size_t e = 0; e < scanner.energies.size(); ++e) {
      const double norm = coherent_norm_oracle(scanner.energies[e], peak.peaks, gm, scanner.hc);
      const double c = kMcPhotons * h / scanner.beta * p_coh / norm;
      for (std::size_t s = 0; s < scanner.source_x1.size(); ++s) {
        double pred = 0.0, count = 0.0;
        for (std::size_t d = 0; d < scanner.detector_x1.size(); ++d) {
          pred += c * mu[idx.row(e, s, d)];
          count += static_cast<double>(t.coherent[idx.row(e, s, d)]);
        }
        ++bins;
        const double z = std::abs(count - pred) / std::sqrt(std::max(pred, 1.0));
        worst = std::max(worst, z);
        if (z <= kMcSigmas) ++inside;
        total_pred += pred;
        total_count += count;
      }
    }
    o.require(inside == bins, "(a) " + std::to_string(inside) + "/" + std::to_string(bins) +
                                  " (E, s1) bins within 3 sigma, worst " + fmt("%.2f", worst) + " sigma, counts " +
                                  fmt("%.0f", total_count) + " (expected " + fmt("%.1f", total_expected) + ") vs " +
                                  fmt("%.1f", total_pred));
  }

  {  // (b) attenuation error and Compton signal on a (radius, energy) grid.
    MaterialLibrary lib(fs::path(BST_TEST_DATA_DIR) / "materials");
    auto scanner = ScannerConfig::full_scale();
    scanner.source_x1 = {-60, 0, 60};
    scanner.detector_x1 = lattice(-297.5, 5, 120);
    scanner.energies = lattice(1, 1, 29);
    const std::vector<double> radii{5, 10, 15};
    const std::vector<std::size_t> energy_idx{13, 19, 27};  // 14, 20, 28 keV
    double err[3][3], compton[3][3];
    for (std::size_t ri = 0; ri < 3; ++ri)
      for (std::size_t ei = 0; ei < 3; ++ei) {
        McConfig mc;
        mc.histories = 200000;
        mc.photons_per_projection_per_energy = 1e10;
        mc.energy_indices = {energy_idx[ei]};
        mc.phantom.objects = {{"graphite", ShapeKind::sphere, 0.0, radii[ri], 1.0}};
        mc.attenuation = false;
        const auto free = mc_run(mc, scanner, lib);
        mc.attenuation = true;
        const auto att = mc_run(mc, scanner, lib);
        all_conserved = all_conserved && conserved(free) && conserved(att);
        double c_free = 0.0, c_att = 0.0, inc = 0.0;
        for (double v : free.coherent_expected) c_free += v;
        for (double v : att.coherent_expected) c_att += v;
        for (double v : att.compton_expected) inc += v;
        err[ri][ei] = 1.0 - c_att / c_free;
        compton[ri][ei] = inc / (2.0 * radii[ri]);
      }
    bool err_ok = true, compton_ok = true;
    std::string table;
    for (std::size_t ri = 0; ri < 3; ++ri)
      for (std::size_t ei = 0; ei < 3; ++ei) {
        if (ri > 0 && !(err[ri][ei] > err[ri - 1][ei])) err_ok = false;
        if (ei > 0 && !(err[ri][ei] < err[ri][ei - 1])) err_ok = false;
        if (ri > 0 && !(compton[ri][ei] < compton[ri - 1][ei])) compton_ok = false;
        if (ei > 0 && !(compton[ri][ei] > compton[ri][ei - 1])) compton_ok = false;
        table += (table.empty() ? "" : " ") + fmt("%.3f", err[ri][ei]);
      }
    o.require(err_ok, "(b) attenuation error up in r, down in E [" + table + "]");
    o.require(compton_ok, "(b) Compton signal per mm down in r, up in E");
  }
  o.require(all_conserved, "(c) scattered + absorbed + transmitted + escaped = launched");
  return o;
}

// 6 and 7 on the desk run and the small noiseless runs.
void small_runs() {
  if (!shared.small_runs.empty()) return;
  for (const auto& s : {test::gradient_instance(), test::exhaustive_instance()}) {
    shared.small_runs.push_back(run_2dbsr(as_data(s, s.clean), s.library, s.A, small_params()));
    shared.small_libraries.push_back(s.library);
  }
}

Outcome binarisation() {
  Outcome o;
  const auto& r = desk_run();
  o.require(binarised(r.best.at("2dbsr").a), "desk");
  small_runs();
  for (std::size_t k = 0; k < shared.small_runs.size(); ++k)
    o.require(binarised(shared.small_runs[k].a), "small instance " + std::to_string(k + 1));
  return o;
}

Outcome disjointness() {
  Outcome o;
  const auto& r = desk_run();
  o.require(disjoint(r.best.at("2dbsr"), shared.desk_library),
            "desk (" + std::to_string(r.best.at("2dbsr").active_set().size()) + " active)");
  small_runs();
  for (std::size_t k = 0; k < shared.small_runs.size(); ++k)
    o.require(disjoint(shared.small_runs[k], shared.small_libraries[k]), "small instance " + std::to_string(k + 1));
  return o;
}

// 8. Monotone traces and the two-stage improvement on Monte Carlo data.
Outcome traces() {
  Outcome o;
  const auto& r = desk_run();
  std::vector<std::string> broken;
  for (const auto& [method, res] : r.best)
    if (!trace_monotone(res.trace)) broken.push_back("desk " + method);
  small_runs();
  for (std::size_t k = 0; k < shared.small_runs.size(); ++k)
    if (!trace_monotone(shared.small_runs[k].trace)) broken.push_back("small " + std::to_string(k + 1));

  auto cfg = load_config(fs::path(BST_TEST_CONFIG_DIR) / "desk_phantom1.ini");
  cfg.name = "mc_nacl_two_stage";
  cfg.data.source = DataSource::monte_carlo;
  cfg.phantom.objects = parse_objects("NaCl:sphere:0:15");
  cfg.recon.methods = {"2dbsr"};
  cfg.recon.two_stage = true;
  cfg.mc.histories = 20000;
  cfg.mc.photons_per_projection_per_energy = 6e10;
  cfg.mc.phantom = cfg.phantom;
  const auto mc = run_experiment(cfg, false);
  for (const auto& [method, res] : mc.best)
    if (!trace_monotone(res.trace)) broken.push_back("mc " + method);
  std::string which;
  for (const auto& b : broken) which += " " + b;
  o.require(broken.empty(), "objective traces non-increasing" + (broken.empty() ? std::string() : " (" + which.substr(1) + ")"));
  const double f1 = best_f1(mc, "2dbsr", 1);
  const double f2 = best_f1(mc, "2dbsr", 2);
  o.require(f2 > f1, "two-stage F1 " + fmt("%.3f", f1) + " -> " + fmt("%.3f", f2));
  return o;
}

// 9. Active set against brute force over all binary activations.
Outcome exhaustive() {
  Outcome o;
  const auto s = test::exhaustive_instance();
  const auto b = as_data(s, s.clean);
  const auto params = small_params();
  const BsrProblem prob(s.A, s.library, b.values, params);
  const std::size_t l = s.library.size();
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_set;
  for (std::size_t mask = 0; mask < (std::size_t{1} << l); ++mask) {
    std::vector<double> a(l, 0.0);
    std::vector<std::size_t> set;
    for (std::size_t j = 0; j < l; ++j)
      if (mask >> j & 1) {
        a[j] = 1.0;
        set.push_back(j);
      }
    const auto Y = solve_spectra(prob, a, Matrix(s.grid.n(), l, 1.0), 3000);
    const double v = prob.evaluate(a, Y, nullptr);
    if (v < best) {
      best = v;
      best_set = set;
    }
  }
  const auto r = run_2dbsr(b, s.library, s.A, params);
  auto show = [](const std::vector<std::size_t>& v) {
    std::string t = "{";
    for (std::size_t k = 0; k < v.size(); ++k) t += (k ? "," : "") + std::to_string(v[k]);
    return t + "}";
  };
  o.require(r.active_set() == best_set, "2dbsr " + show(r.active_set()) + " vs brute force " + show(best_set));
  return o;
}

// 10. Byte-identical reruns across thread counts.
std::string tiny_config(const std::string& source) {
  return std::string(R"(
[experiment]
name = determinism
[scanner]
source_first_mm = -100
source_step_mm = 100
source_count = 3
detector_first_mm = -290
detector_step_mm = 20
detector_count = 30
energy_first_keV = 4
energy_step_keV = 4
energy_count = 7
[grid]
q_bins = 40
x1_pixels = 40
x1_min_mm = -100
x1_max_mm = 100
[library]
center_min_mm = -50
center_max_mm = 50
center_step_mm = 10
width_min_mm = 20
width_max_mm = 30
width_step_mm = 10
[recon]
methods = 2dbsr,ftv
lambdas_2dbsr = 0.1,1
lambdas_ftv = 1
outer_iterations = 4
inner_iterations = 15
ftv_iterations = 40
two_stage = true
[data]
source = )") + source + R"(
eta_c = 10
seed = 9
[phantom]
objects = NaCl:sphere:-30:12;graphite:sphere:40:10
clutter = true
[mc]
histories = 3000
photons_per_projection_per_energy = 1e9
)";
}

Outcome determinism() {
  Outcome o;
  for (const char* source : {"analytic", "mc"}) {
    const auto dir = scratch(std::string("determinism_") + source);
    auto cfg = parse_config(tiny_config(source));
    cfg.materials_dir = fs::path(BST_TEST_DATA_DIR) / "materials";
    cfg.output_dir = dir;
    std::vector<std::pair<fs::path, std::string>> first;
    bool same = true;
    std::size_t files = 0;
    for (int threads : {1, 4, 1}) {
      cfg.threads = threads;
      fs::remove_all(dir);
      run_experiment(cfg, true);
      std::vector<std::pair<fs::path, std::string>> now;
      for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) now.emplace_back(fs::relative(e.path(), dir), slurp(e.path()));
      std::sort(now.begin(), now.end());
      if (first.empty()) {
        first = std::move(now);
        files = first.size();
      } else if (now != first) {
        same = false;
      }
    }
    o.require(same && files > 0, std::string(source) + " " + std::to_string(files) + " files, threads 1/4/1");
  }
  set_threads(0);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradients match central differences", gradients},
      {"spectral filter values", filter_values},
      {"noise calibration", calibration},
      {"desk-scale reconstruction", desk},
      {"Monte Carlo consistency", monte_carlo},
      {"binarisation", binarisation},
      {"disjoint active set", disjointness},
      {"monotone traces and two-stage gain", traces},
      {"exhaustive active-set check", exhaustive},
      {"determinism", determinism},
  };
  std::set<int> selected;
  for (int k = 1; k < argc; ++k) selected.insert(std::atoi(argv[k]));
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[k].second();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!out.pass) ++failures;
    std::printf("%s criterion %2d %s: %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", id, criteria[k].first.c_str(),
                out.detail.c_str(), dt);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
