#include "bst/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "bst/errors.hpp"
#include "csv.hpp"

namespace bst {

namespace pt = boost::property_tree;

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (auto f : detail::split(detail::trim(text)))
    if (!f.empty()) out.push_back(detail::parse_double(f, "list"));
  return out;
}

std::vector<std::size_t> parse_index_list(const std::string& text) {
  std::vector<std::size_t> out;
  for (double v : parse_double_list(text)) {
    if (!(v >= 0.0) || v != std::floor(v)) throw ConfigError("expected nonnegative integer index");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

namespace {

std::vector<double> range(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw ConfigError("library: invalid range");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  return lattice(lo, step, count);
}

std::string join(const std::vector<double>& v) {
  std::ostringstream s;
  s.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
  return s.str();
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

// Reads known keys and tracks which were consumed.
class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  template <typename F>
  void with(const std::string& key, F&& f) {
    const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
    if (!v) return;
    used_.insert(key);
    try {
      f(std::string(detail::trim(*v)));
    } catch (const ConfigError& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    } catch (const IoError& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
  void real(const std::string& key, double& out) {
    with(key, [&](const std::string& v) { out = detail::parse_double(v, key); });
  }
  void count(const std::string& key, std::size_t& out) {
    with(key, [&](const std::string& v) {
      const double d = detail::parse_double(v, key);
      if (!(d >= 0.0) || d != std::floor(d)) throw ConfigError("expected a nonnegative integer");
      out = static_cast<std::size_t>(d);
    });
  }
  void integer(const std::string& key, int& out) {
    with(key, [&](const std::string& v) {
      const double d = detail::parse_double(v, key);
      if (d != std::floor(d)) throw ConfigError("expected an integer");
      out = static_cast<int>(d);
    });
  }
  void u64(const std::string& key, std::uint64_t& out) {
    with(key, [&](const std::string& v) {
      std::uint64_t x = 0;
      const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
      if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError("expected an unsigned integer");
      out = x;
    });
  }
  void flag(const std::string& key, bool& out) {
    with(key, [&](const std::string& v) { out = parse_bool(v, key); });
  }
  void text(const std::string& key, std::string& out) {
    with(key, [&](const std::string& v) { out = v; });
  }

  void reject_unknown() const {
    for (const auto& [section, body] : tree_) {
      if (body.empty()) throw ConfigError("config: key '" + section + "' outside any section");
      for (const auto& [key, value] : body) {
        const std::string full = section + "." + key;
        if (!used_.count(full)) throw ConfigError("config: unknown key '" + full + "'");
      }
    }
  }

 private:
  const pt::ptree& tree_;
  std::set<std::string> used_;
};

}  // namespace

std::vector<double> LibraryConfig::centers() const { return range(center_min, center_max, center_step); }
std::vector<double> LibraryConfig::widths() const { return range(width_min, width_max, width_step); }

CharacteristicLibrary LibraryConfig::make(const ImageGrid& grid) const {
  const auto c = centers();
  const auto w = widths();
  return build_library(c, w, grid, merge_duplicates);
}

void ExperimentConfig::validate() const {
  scanner.validate();
  grid.make();
  if (!(slice_x2 > -scanner.w_x2 && slice_x2 < scanner.w_x2)) throw ConfigError("scanner: slice outside the scanner");
  recon.params.validate();
  if (recon.methods.empty()) throw ConfigError("recon: no methods");
  for (const auto& m : recon.methods)
    if (m != "2dbsr" && m != "ftv") throw ConfigError("recon: unknown method '" + m + "'");
  if (recon.lambdas_2dbsr.empty() || recon.lambdas_ftv.empty()) throw ConfigError("recon: empty lambda list");
  if (!(recon.edge_tau > 0.0 && recon.edge_tau < 1.0)) throw ConfigError("recon: edge_tau must lie in (0, 1)");
  if (data.source == DataSource::analytic && !(data.eta_c > 0.0)) throw ConfigError("data: eta_c must be positive");
  if (data.source == DataSource::file && data.path.empty()) throw ConfigError("data: file source needs a path");
  if (!(sigma2 > 0.0)) throw ConfigError("phantom: sigma2 must be positive");
  phantom.validate();
  if (data.source == DataSource::monte_carlo) mc.validate();
  if (threads < 0) throw ConfigError("threads must be nonnegative");
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  Reader r(tree);
  auto resolve = [&](const std::string& v) {
    const std::filesystem::path p(v);
    return p.is_absolute() ? p : base_dir / p;
  };

  r.text("experiment.name", c.name);

  auto& s = c.scanner;
  r.real("scanner.w_x1_mm", s.w_x1);
  r.real("scanner.w_x2_mm", s.w_x2);
  r.with("scanner.beta_deg", [&](const std::string& v) {
    s.beta = detail::parse_double(v, "beta_deg") * std::numbers::pi / 180.0;
  });
  double src_first = -300.0, src_step = 20.0, det_first = -300.0, det_step = 1.0, e_first = 1.0, e_step = 1.0;
  std::size_t src_count = 31, det_count = 600, e_count = 29;
  r.real("scanner.source_first_mm", src_first);
  r.real("scanner.source_step_mm", src_step);
  r.count("scanner.source_count", src_count);
  r.real("scanner.detector_first_mm", det_first);
  r.real("scanner.detector_step_mm", det_step);
  r.count("scanner.detector_count", det_count);
  r.real("scanner.energy_first_keV", e_first);
  r.real("scanner.energy_step_keV", e_step);
  r.count("scanner.energy_count", e_count);
  s.source_x1 = lattice(src_first, src_step, src_count);
  s.detector_x1 = lattice(det_first, det_step, det_count);
  s.energies = lattice(e_first, e_step, e_count);
  r.with("scanner.spectrum", [&](const std::string& v) { s.source_spectrum = parse_double_list(v); });
  r.real("scanner.detector_area_mm2", s.detector_area);
  r.real("scanner.hc_keV_A", s.hc);
  r.real("scanner.phi_slope", s.phi_slope);
  r.real("scanner.phi_intercept_mm", s.phi_intercept);
  r.real("scanner.slice_x2_mm", c.slice_x2);

  r.count("grid.q_bins", c.grid.q_bins);
  r.real("grid.q_min_invA", c.grid.q_min);
  r.real("grid.q_max_invA", c.grid.q_max);
  r.count("grid.x1_pixels", c.grid.x1_pixels);
  r.real("grid.x1_min_mm", c.grid.x1_min);
  r.real("grid.x1_max_mm", c.grid.x1_max);

  r.real("library.center_min_mm", c.library.center_min);
  r.real("library.center_max_mm", c.library.center_max);
  r.real("library.center_step_mm", c.library.center_step);
  r.real("library.width_min_mm", c.library.width_min);
  r.real("library.width_max_mm", c.library.width_max);
  r.real("library.width_step_mm", c.library.width_step);
  r.flag("library.merge_duplicates", c.library.merge_duplicates);

  auto& p = c.recon.params;
  r.with("recon.methods", [&](const std::string& v) {
    c.recon.methods.clear();
    for (auto f : detail::split(v))
      if (!f.empty()) c.recon.methods.emplace_back(f);
  });
  r.with("recon.lambdas_2dbsr", [&](const std::string& v) { c.recon.lambdas_2dbsr = parse_double_list(v); });
  r.with("recon.lambdas_ftv", [&](const std::string& v) { c.recon.lambdas_ftv = parse_double_list(v); });
  r.flag("recon.two_stage", c.recon.two_stage);
  r.real("recon.edge_tau", c.recon.edge_tau);
  r.real("recon.alpha", p.alpha);
  r.real("recon.gamma", p.gamma);
  r.integer("recon.outer_iterations", p.n1);
  r.integer("recon.inner_iterations", p.n2);
  r.integer("recon.ftv_iterations", p.ftv_iters);
  r.integer("recon.memory", p.memory);
  r.real("recon.log_floor", p.log_floor);
  r.real("recon.tv_beta", p.tv_beta);
  r.real("recon.rel_tolerance", p.rel_f_tol);
  r.real("recon.a0", p.a0);
  r.real("recon.y0", p.y0);
  r.integer("recon.warmup_iterations", p.warmup);
  r.real("recon.warmup_gamma_decades", p.warmup_gamma_decades);
  r.real("recon.warmup_alpha_decades", p.warmup_alpha_decades);

  r.with("data.source", [&](const std::string& v) {
    if (v == "analytic")
      c.data.source = DataSource::analytic;
    else if (v == "mc")
      c.data.source = DataSource::monte_carlo;
    else if (v == "file")
      c.data.source = DataSource::file;
    else
      throw ConfigError("expected analytic, mc or file");
  });
  r.real("data.eta_c", c.data.eta_c);
  r.u64("data.seed", c.data.seed);
  r.with("data.path", [&](const std::string& v) { c.data.path = resolve(v); });

  r.with("phantom.objects", [&](const std::string& v) { c.phantom.objects = parse_objects(v); });
  r.with("phantom.materials_dir", [&](const std::string& v) { c.materials_dir = resolve(v); });
  r.real("phantom.sigma2_invA2", c.sigma2);
  bool clutter = false;
  ClutterSpec cs;
  r.flag("phantom.clutter", clutter);
  r.text("phantom.clutter_material", cs.material);
  r.real("phantom.clutter_side_mm", cs.side);
  r.real("phantom.clutter_attenuation_scale", cs.attenuation_scale);
  if (clutter) c.phantom.clutter = cs;

  auto& m = c.mc;
  r.real("mc.photons_per_projection_per_energy", m.photons_per_projection_per_energy);
  r.u64("mc.histories", m.histories);
  r.real("mc.step_mm", m.step);
  r.with("mc.mode", [&](const std::string& v) {
    if (v == "forced")
      m.mode = McMode::forced;
    else if (v == "literal")
      m.mode = McMode::literal;
    else
      throw ConfigError("expected forced or literal");
  });
  r.flag("mc.photoelectric", m.toggles.photoelectric);
  r.flag("mc.incoherent", m.toggles.incoherent);
  r.flag("mc.coherent", m.toggles.coherent);
  r.flag("mc.attenuation", m.attenuation);
  r.with("mc.energy_indices", [&](const std::string& v) { m.energy_indices = parse_index_list(v); });
  r.real("mc.detector_pitch_mm", m.detector_pitch);

  r.with("output.dir", [&](const std::string& v) { c.output_dir = resolve(v); });
  r.integer("run.threads", c.threads);

  r.reject_unknown();
  if (c.materials_dir.empty()) c.materials_dir = base_dir / "data" / "materials";
  c.phantom.slice_x2 = c.slice_x2;
  m.phantom = c.phantom;
  m.seed = c.data.seed;
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

std::string render_config(const ExperimentConfig& c) {
  std::ostringstream o;
  const auto& s = c.scanner;
  auto step = [](const std::vector<double>& v) { return v.size() > 1 ? v[1] - v[0] : 1.0; };
  o << "[experiment]\nname = " << c.name << "\n\n";
  o << "[scanner]\n"
    << "w_x1_mm = " << num(s.w_x1) << "\nw_x2_mm = " << num(s.w_x2)
    << "\nbeta_deg = " << num(s.beta * 180.0 / std::numbers::pi)
    << "\nsource_first_mm = " << num(s.source_x1.front()) << "\nsource_step_mm = " << num(step(s.source_x1))
    << "\nsource_count = " << s.source_x1.size()
    << "\ndetector_first_mm = " << num(s.detector_x1.front())
    << "\ndetector_step_mm = " << num(step(s.detector_x1)) << "\ndetector_count = " << s.detector_x1.size()
    << "\nenergy_first_keV = " << num(s.energies.front()) << "\nenergy_step_keV = " << num(step(s.energies))
    << "\nenergy_count = " << s.energies.size();
  if (!s.source_spectrum.empty()) o << "\nspectrum = " << join(s.source_spectrum);
  o << "\ndetector_area_mm2 = " << num(s.detector_area) << "\nhc_keV_A = " << num(s.hc)
    << "\nphi_slope = " << num(s.phi_slope) << "\nphi_intercept_mm = " << num(s.phi_intercept)
    << "\nslice_x2_mm = " << num(c.slice_x2) << "\n\n";
  o << "[grid]\nq_bins = " << c.grid.q_bins << "\nq_min_invA = " << num(c.grid.q_min)
    << "\nq_max_invA = " << num(c.grid.q_max) << "\nx1_pixels = " << c.grid.x1_pixels
    << "\nx1_min_mm = " << num(c.grid.x1_min) << "\nx1_max_mm = " << num(c.grid.x1_max) << "\n\n";
  o << "[library]\ncenter_min_mm = " << num(c.library.center_min) << "\ncenter_max_mm = " << num(c.library.center_max)
    << "\ncenter_step_mm = " << num(c.library.center_step) << "\nwidth_min_mm = " << num(c.library.width_min)
    << "\nwidth_max_mm = " << num(c.library.width_max) << "\nwidth_step_mm = " << num(c.library.width_step)
    << "\nmerge_duplicates = " << (c.library.merge_duplicates ? "true" : "false") << "\n\n";
  const auto& p = c.recon.params;
  o << "[recon]\nmethods = " << join(c.recon.methods) << "\nlambdas_2dbsr = " << join(c.recon.lambdas_2dbsr)
    << "\nlambdas_ftv = " << join(c.recon.lambdas_ftv) << "\ntwo_stage = " << (c.recon.two_stage ? "true" : "false")
    << "\nedge_tau = " << num(c.recon.edge_tau) << "\nalpha = " << num(p.alpha) << "\ngamma = " << num(p.gamma)
    << "\nouter_iterations = " << p.n1 << "\ninner_iterations = " << p.n2 << "\nftv_iterations = " << p.ftv_iters
    << "\nmemory = " << p.memory << "\nlog_floor = " << num(p.log_floor) << "\ntv_beta = " << num(p.tv_beta)
    << "\nrel_tolerance = " << num(p.rel_f_tol) << "\na0 = " << num(p.a0) << "\ny0 = " << num(p.y0)
    << "\nwarmup_iterations = " << p.warmup << "\nwarmup_gamma_decades = " << num(p.warmup_gamma_decades)
    << "\nwarmup_alpha_decades = " << num(p.warmup_alpha_decades) << "\n\n";
  o << "[data]\nsource = "
    << (c.data.source == DataSource::analytic ? "analytic" : c.data.source == DataSource::monte_carlo ? "mc" : "file")
    << "\neta_c = " << num(c.data.eta_c) << "\nseed = " << c.data.seed;
  if (!c.data.path.empty()) o << "\npath = " << c.data.path.string();
  o << "\n\n[phantom]\nobjects = " << format_objects(c.phantom.objects)
    << "\nmaterials_dir = " << c.materials_dir.string() << "\nsigma2_invA2 = " << num(c.sigma2)
    << "\nclutter = " << (c.phantom.clutter ? "true" : "false");
  if (c.phantom.clutter)
    o << "\nclutter_material = " << c.phantom.clutter->material << "\nclutter_side_mm = " << num(c.phantom.clutter->side)
      << "\nclutter_attenuation_scale = " << num(c.phantom.clutter->attenuation_scale);
  const auto& m = c.mc;
  o << "\n\n[mc]\nphotons_per_projection_per_energy = " << num(m.photons_per_projection_per_energy)
    << "\nhistories = " << m.histories << "\nstep_mm = " << num(m.step)
    << "\nmode = " << (m.mode == McMode::forced ? "forced" : "literal")
    << "\nphotoelectric = " << (m.toggles.photoelectric ? "true" : "false")
    << "\nincoherent = " << (m.toggles.incoherent ? "true" : "false")
    << "\ncoherent = " << (m.toggles.coherent ? "true" : "false")
    << "\nattenuation = " << (m.attenuation ? "true" : "false");
  if (!m.energy_indices.empty()) {
    std::vector<double> idx(m.energy_indices.begin(), m.energy_indices.end());
    o << "\nenergy_indices = " << join(idx);
  }
  o << "\ndetector_pitch_mm = " << num(m.detector_pitch) << "\n\n";
  o << "[output]\ndir = " << c.output_dir.string() << "\n\n[run]\nthreads = " << c.threads << "\n";
  return o.str();
}

}  // namespace bst
