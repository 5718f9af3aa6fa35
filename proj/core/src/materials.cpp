#include "bst/materials.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>

#include "bst/errors.hpp"
#include "csv.hpp"

namespace bst {

void BraggPeakList::validate() const {
  if (peaks.empty()) throw ConfigError("peak list '" + material_id + "' has no peaks");
  double prev = 0.0;
  for (const auto& p : peaks) {
    if (!(p.q > prev)) throw ConfigError("peak list '" + material_id + "': q must be increasing and positive");
    if (!(p.q < q_max)) throw ConfigError("peak list '" + material_id + "': peak beyond q_max");
    if (!(p.g >= 0.0)) throw ConfigError("peak list '" + material_id + "': negative intensity");
    prev = p.q;
  }
}

double mixture_value(double q, const BraggPeakList& peaks, const GaussianMixtureParams& gm) {
  // Peaks further than 40 sigma contribute < exp(-1600).
  const double reach = 40.0 * std::sqrt(gm.sigma2);
  auto it = std::lower_bound(peaks.peaks.begin(), peaks.peaks.end(), q - reach,
                             [](const BraggPeak& p, double v) { return p.q < v; });
  double sum = 0.0;
  for (; it != peaks.peaks.end() && it->q <= q + reach; ++it) {
    const double dq = q - it->q;
    sum += it->g * std::exp(-dq * dq / gm.sigma2);
  }
  return sum;
}

double mixture_max(const BraggPeakList& peaks, const GaussianMixtureParams& gm) {
  const double sigma = std::sqrt(gm.sigma2);
  double best = 0.0;
  for (const auto& p : peaks.peaks) {
    for (int k = -60; k <= 60; ++k) {
      const double q = p.q + sigma * 0.05 * k;
      best = std::max(best, mixture_value(q, peaks, gm));
    }
  }
  return best;
}

void normalize(BraggPeakList& peaks, const GaussianMixtureParams& gm) {
  const double m = mixture_max(peaks, gm);
  if (!(m > 0.0)) throw DomainError("normalize: peak list '" + peaks.material_id + "' is identically zero");
  for (auto& p : peaks.peaks) p.g /= m;
}

double evaluate_F(double q, const BraggPeakList& peaks, const GaussianMixtureParams& gm) {
  if (!(q >= 0.0)) throw DomainError("evaluate_F: q must be nonnegative");
  return mixture_value(q, peaks, gm);
}

double cell_average_F(double q_lo, double q_hi, const BraggPeakList& peaks,
                      const GaussianMixtureParams& gm) {
  if (!(q_hi > q_lo)) throw DomainError("cell_average_F: empty cell");
  const double sigma = std::sqrt(gm.sigma2);
  double sum = 0.0;
  for (const auto& p : peaks.peaks) {
    if (p.q < q_lo - 40.0 * sigma || p.q > q_hi + 40.0 * sigma) continue;
    sum += p.g * 0.5 * std::sqrt(std::numbers::pi) * sigma *
           (std::erf((q_hi - p.q) / sigma) - std::erf((q_lo - p.q) / sigma));
  }
  return sum / (q_hi - q_lo);
}

BraggPeakList load_peak_list(const std::filesystem::path& path, const std::string& material_id,
                             double q_max) {
  const auto rows = detail::read_numeric_csv(path, {"q_invA", "intensity"});
  BraggPeakList list;
  list.material_id = material_id;
  list.q_max = q_max;
  for (const auto& r : rows)
    if (r[0] < q_max) list.peaks.push_back({r[0], r[1]});
  list.validate();
  return list;
}

void save_peak_list(const std::filesystem::path& path, const BraggPeakList& peaks) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "q_invA,intensity\n" << std::setprecision(17);
  for (const auto& p : peaks.peaks) out << p.q << ',' << p.g << '\n';
}

double d_spacing_cubic(double a0, MillerIndex hkl) {
  const auto [h, k, l] = hkl;
  if (h == 0 && k == 0 && l == 0) throw DomainError("d_spacing_cubic: Miller index (0,0,0)");
  if (!(a0 > 0.0)) throw DomainError("d_spacing_cubic: lattice constant must be positive");
  return a0 / std::sqrt(static_cast<double>(h * h + k * k + l * l));
}

double d_spacing_hexagonal(double a, double c, MillerIndex hkl) {
  const auto [h, k, l] = hkl;
  if (h == 0 && k == 0 && l == 0) throw DomainError("d_spacing_hexagonal: Miller index (0,0,0)");
  if (!(a > 0.0 && c > 0.0)) throw DomainError("d_spacing_hexagonal: lattice constants must be positive");
  const double inv_d2 = 4.0 * (h * h + h * k + k * k) / (3.0 * a * a) + static_cast<double>(l * l) / (c * c);
  return 1.0 / std::sqrt(inv_d2);
}

double peak_q_from_spacing(double d) {
  if (!(d > 0.0)) throw DomainError("peak_q_from_spacing: spacing must be positive");
  return 0.5 / d;
}

double CromerMann::operator()(double q) const {
  const double s2 = q * q;
  double f = c;
  for (std::size_t i = 0; i < 4; ++i) f += a[i] * std::exp(-b[i] * s2);
  return f;
}

// International Tables for Crystallography, Vol. C, Table 6.1.1.4.
CromerMann CromerMann::carbon() {
  return {{2.31000, 1.02000, 1.58860, 0.865000}, {20.8439, 10.2075, 0.568700, 51.6512}, 0.215600};
}
CromerMann CromerMann::sodium() {
  return {{4.76260, 3.17360, 1.26740, 1.11280}, {3.28500, 8.84220, 0.313600, 129.424}, 0.676000};
}
CromerMann CromerMann::chlorine() {
  return {{11.4604, 7.19640, 6.25560, 1.64550}, {0.010400, 1.16620, 18.5194, 47.7784}, -9.55740};
}

double structure_factor(double q, const std::vector<CellAtom>& cell, MillerIndex hkl) {
  std::complex<double> sum{0.0, 0.0};
  for (const auto& atom : cell) {
    const Vec3 x = atom.fractional;
    const double phase = -2.0 * std::numbers::pi * (x.x1 * hkl[0] + x.x2 * hkl[1] + x.x3 * hkl[2]);
    sum += atom.form_factor(q) * std::polar(1.0, phase);
  }
  return std::norm(sum);
}

double UnitCell::d_spacing(MillerIndex hkl) const {
  return kind == LatticeKind::cubic ? d_spacing_cubic(a, hkl) : d_spacing_hexagonal(a, c, hkl);
}

namespace {

std::vector<CellAtom> fcc(const std::function<double(double)>& f, Vec3 offset) {
  const Vec3 base[4] = {{0, 0, 0}, {0, 0.5, 0.5}, {0.5, 0, 0.5}, {0.5, 0.5, 0}};
  std::vector<CellAtom> atoms;
  for (const auto& b : base) {
    Vec3 p = b + offset;
    p.x1 -= std::floor(p.x1);
    p.x2 -= std::floor(p.x2);
    p.x3 -= std::floor(p.x3);
    atoms.push_back({f, p});
  }
  return atoms;
}

}  // namespace

UnitCell UnitCell::sodium_chloride() {
  UnitCell cell{LatticeKind::cubic, 5.640, 5.640, {}};
  cell.atoms = fcc(CromerMann::sodium(), {0, 0, 0});
  auto cl = fcc(CromerMann::chlorine(), {0.5, 0.5, 0.5});
  cell.atoms.insert(cell.atoms.end(), cl.begin(), cl.end());
  return cell;
}

UnitCell UnitCell::diamond() {
  UnitCell cell{LatticeKind::cubic, 3.567, 3.567, {}};
  cell.atoms = fcc(CromerMann::carbon(), {0, 0, 0});
  auto second = fcc(CromerMann::carbon(), {0.25, 0.25, 0.25});
  cell.atoms.insert(cell.atoms.end(), second.begin(), second.end());
  return cell;
}

UnitCell UnitCell::graphite() {
  UnitCell cell{LatticeKind::hexagonal, 2.464, 6.711, {}};
  const auto f = CromerMann::carbon();
  cell.atoms = {{f, {0.0, 0.0, 0.25}},
                {f, {0.0, 0.0, 0.75}},
                {f, {1.0 / 3.0, 2.0 / 3.0, 0.25}},
                {f, {2.0 / 3.0, 1.0 / 3.0, 0.75}}};
  return cell;
}

BraggPeakList powder_peaks(const UnitCell& cell, const std::string& material_id, double q_max) {
  if (!(q_max > 0.0)) throw DomainError("powder_peaks: q_max must be positive");
  const double d_min = 0.5 / q_max;
  const double c_axis = cell.kind == LatticeKind::cubic ? cell.a : cell.c;
  // Generous index bounds: every reflection with d >= d_min lies inside.
  const int hk_max = static_cast<int>(std::ceil(2.0 * cell.a / d_min)) + 1;
  const int l_max = static_cast<int>(std::ceil(c_axis / d_min)) + 1;

  struct Reflection {
    double q;
    double intensity;
  };
  std::vector<Reflection> refl;
  for (int h = -hk_max; h <= hk_max; ++h)
    for (int k = -hk_max; k <= hk_max; ++k)
      for (int l = -l_max; l <= l_max; ++l) {
        if (h == 0 && k == 0 && l == 0) continue;
        const double d = cell.d_spacing({h, k, l});
        if (d < d_min) continue;
        const double q = peak_q_from_spacing(d);
        if (!(q < q_max)) continue;
        refl.push_back({q, structure_factor(q, cell.atoms, {h, k, l})});
      }
  std::sort(refl.begin(), refl.end(), [](const auto& x, const auto& y) { return x.q < y.q; });

  BraggPeakList list;
  list.material_id = material_id;
  list.q_max = q_max;
  double strongest = 0.0;
  for (std::size_t i = 0; i < refl.size();) {
    std::size_t j = i;
    double f2 = 0.0;
    while (j < refl.size() && refl[j].q - refl[i].q <= 1e-9 * refl[i].q) f2 += refl[j++].intensity;
    const double q = refl[i].q;
    list.peaks.push_back({q, f2 / (2.0 * q * q)});
    strongest = std::max(strongest, list.peaks.back().g);
    i = j;
  }
  std::erase_if(list.peaks, [&](const BraggPeak& p) { return p.g < 1e-8 * strongest; });
  return list;
}

AttenuationTable::AttenuationTable(std::string material_id, std::vector<AttenuationRow> rows)
    : material_id_(std::move(material_id)), rows_(std::move(rows)) {
  if (rows_.empty()) throw ConfigError("attenuation table '" + material_id_ + "' is empty");
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& r = rows_[i];
    if (!(r.energy > 0.0)) throw ConfigError("attenuation table '" + material_id_ + "': energies must be positive");
    if (i > 0 && !(r.energy > rows_[i - 1].energy))
      throw ConfigError("attenuation table '" + material_id_ + "': energies must be strictly increasing");
    if (!(r.mu_pe >= 0.0 && r.mu_inc >= 0.0 && r.mu_coh >= 0.0))
      throw ConfigError("attenuation table '" + material_id_ + "': negative coefficient");
  }
}

namespace {

double pick(const AttenuationRow& r, Interaction kind) {
  switch (kind) {
    case Interaction::photoelectric: return r.mu_pe;
    case Interaction::incoherent: return r.mu_inc;
    case Interaction::coherent: return r.mu_coh;
    case Interaction::none: break;
  }
  return 0.0;
}

// Log-log between positive neighbours, linear when either end is zero.
double interpolate(double e, double e0, double e1, double v0, double v1) {
  if (v0 > 0.0 && v1 > 0.0) {
    const double t = std::log(e / e0) / std::log(e1 / e0);
    return std::exp(std::log(v0) + t * (std::log(v1) - std::log(v0)));
  }
  const double t = (e - e0) / (e1 - e0);
  return v0 + t * (v1 - v0);
}

}  // namespace

double AttenuationTable::mu(Interaction kind, double energy) const {
  if (kind == Interaction::none) return 0.0;
  if (!(energy >= min_energy() && energy <= max_energy()))
    throw DomainError("attenuation table '" + material_id_ + "': energy " + std::to_string(energy) +
                      " keV outside [" + std::to_string(min_energy()) + ", " +
                      std::to_string(max_energy()) + "]");
  auto it = std::lower_bound(rows_.begin(), rows_.end(), energy,
                             [](const AttenuationRow& r, double e) { return r.energy < e; });
  if (it->energy == energy) return pick(*it, kind);
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  return interpolate(energy, lo.energy, hi.energy, pick(lo, kind), pick(hi, kind));
}

double AttenuationTable::total_mu(double energy) const {
  return mu(Interaction::photoelectric, energy) + mu(Interaction::incoherent, energy) +
         mu(Interaction::coherent, energy);
}

AttenuationTable AttenuationTable::scaled(double factor) const {
  if (!(factor >= 0.0)) throw DomainError("AttenuationTable::scaled: negative factor");
  auto rows = rows_;
  for (auto& r : rows) {
    r.mu_pe *= factor;
    r.mu_inc *= factor;
    r.mu_coh *= factor;
  }
  return AttenuationTable(material_id_, std::move(rows));
}

AttenuationTable load_attenuation_table(const std::filesystem::path& path,
                                        const std::string& material_id) {
  const auto rows =
      detail::read_numeric_csv(path, {"E_keV", "mu_pe_per_mm", "mu_inc_per_mm", "mu_coh_per_mm"});
  std::vector<AttenuationRow> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back({r[0], r[1], r[2], r[3]});
  return AttenuationTable(material_id, std::move(out));
}

double total_mu(double energy, const AttenuationTable& table) { return table.total_mu(energy); }

MaterialLibrary::MaterialLibrary(std::filesystem::path directory, GaussianMixtureParams gm)
    : directory_(std::move(directory)), gm_(gm) {}

void MaterialLibrary::load(const std::string& id) {
  if (contains(id)) return;
  Material m;
  const auto peaks = directory_ / (id + ".peaks.csv");
  if (std::filesystem::exists(peaks)) {
    m.peaks = load_peak_list(peaks, id);
    normalize(m.peaks, gm_);
  } else {
    m.peaks.material_id = id;
  }
  m.attenuation = load_attenuation_table(directory_ / (id + ".atten.csv"), id);
  materials_.emplace(id, std::move(m));
}

void MaterialLibrary::add(const std::string& id, Material material) {
  materials_.insert_or_assign(id, std::move(material));
}

const Material& MaterialLibrary::get(const std::string& id) const {
  auto it = materials_.find(id);
  if (it == materials_.end()) throw ConfigError("unknown material '" + id + "'");
  return it->second;
}

}  // namespace bst
