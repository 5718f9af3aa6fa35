#include "bst/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <string>

#include "bst/errors.hpp"

namespace bst {

namespace {

constexpr double kPi = std::numbers::pi;

enum Channel : std::uint64_t { kHistory = 1, kCoherentCounts = 2, kComptonCounts = 3 };

Vec3 normalized(Vec3 v) { return (1.0 / norm(v)) * v; }

Vec3 cross(Vec3 a, Vec3 b) {
  return {a.x2 * b.x3 - a.x3 * b.x2, a.x3 * b.x1 - a.x1 * b.x3, a.x1 * b.x2 - a.x2 * b.x1};
}

// Direction at polar angle omega and azimuth phi about u.
Vec3 rotate(Vec3 u, double omega, double phi) {
  const Vec3 helper = std::abs(u.x1) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  const Vec3 e1 = normalized(cross(u, helper));
  const Vec3 e2 = cross(u, e1);
  return std::cos(omega) * u + std::sin(omega) * (std::cos(phi) * e1 + std::sin(phi) * e2);
}

double enabled_mu(const AttenuationTable& t, double energy, InteractionToggles tg, double* pe, double* inc,
                  double* coh) {
  *pe = tg.photoelectric ? t.mu(Interaction::photoelectric, energy) : 0.0;
  *inc = tg.incoherent ? t.mu(Interaction::incoherent, energy) : 0.0;
  *coh = tg.coherent ? t.mu(Interaction::coherent, energy) : 0.0;
  return *pe + *inc + *coh;
}

// Nearest scanner energy bin for a scattered energy; none outside the half-spacing margins.
std::optional<std::size_t> energy_bin(double e, const std::vector<double>& energies) {
  const std::size_t n = energies.size();
  if (n == 1) return std::abs(e - energies[0]) <= 0.5 ? std::optional<std::size_t>(0) : std::nullopt;
  const double lo_edge = energies.front() - 0.5 * (energies[1] - energies[0]);
  const double hi_edge = energies.back() + 0.5 * (energies[n - 1] - energies[n - 2]);
  if (e < lo_edge || e >= hi_edge) return std::nullopt;
  auto it = std::lower_bound(energies.begin(), energies.end(), e);
  if (it == energies.end()) return n - 1;
  std::size_t k = static_cast<std::size_t>(it - energies.begin());
  if (k > 0 && (e - energies[k - 1]) < (energies[k] - e)) --k;
  return k;
}

}  // namespace

void McConfig::validate() const {
  if (!(photons_per_projection_per_energy >= 0.0)) throw ConfigError("mc: photon budget must be nonnegative");
  if (!(step > 0.0)) throw ConfigError("mc: step must be positive");
  if (!(detector_pitch >= 0.0)) throw ConfigError("mc: detector pitch must be nonnegative");
  phantom.validate();
  for (const auto& o : phantom.objects)
    if (o.shape != ShapeKind::sphere) throw ConfigError("mc: phantom objects must be spheres");
}

Sinogram Tally::to_sinogram(const ScannerConfig& scanner, double slice_x2) const {
  Sinogram s{std::vector<double>(coherent.size()), RowIndex::from(scanner), slice_x2, Provenance::monte_carlo};
  if (s.row_index.size() != coherent.size()) throw DimensionError("Tally: shape differs from the scanner");
  for (std::size_t r = 0; r < coherent.size(); ++r)
    s.values[r] = static_cast<double>(coherent[r]) + static_cast<double>(compton[r]);
  return s;
}

Interaction sample_interaction(double energy, const AttenuationTable& table, double step, CounterRng& rng,
                               InteractionToggles toggles) {
  double pe = 0.0;
  double inc = 0.0;
  double coh = 0.0;
  const double mu = enabled_mu(table, energy, toggles, &pe, &inc, &coh);
  if (!(mu > 0.0)) return Interaction::none;
  const double u = rng.uniform();
  if (u < std::exp(-mu * step)) return Interaction::none;
  const double v = rng.uniform() * mu;
  if (v < pe) return Interaction::photoelectric;
  if (v < pe + inc) return Interaction::incoherent;
  return Interaction::coherent;
}

std::optional<double> sample_coherent_angle(double energy, const BraggPeakList& peaks, double hc,
                                            CounterRng& rng) {
  std::vector<double> weight;
  std::vector<double> omega;
  double total = 0.0;
  for (const auto& p : peaks.peaks) {
    const double s = hc * p.q / energy;
    if (s > 1.0) break;
    const double w = 2.0 * std::asin(s);
    const double wt = p.g * p.q * polarization(0.5 * w);
    total += wt;
    weight.push_back(total);
    omega.push_back(w);
  }
  if (!(total > 0.0)) return std::nullopt;
  const double u = rng.uniform() * total;
  const auto k = static_cast<std::size_t>(std::upper_bound(weight.begin(), weight.end(), u) - weight.begin());
  return omega[std::min(k, omega.size() - 1)];
}

double compton_energy(double energy, double omega) {
  if (!(energy > 0.0)) throw DomainError("compton_energy: energy must be positive");
  return energy / (1.0 + (energy / kElectronRestEnergy) * (1.0 - std::cos(omega)));
}

double klein_nishina_dcs(double energy, double omega) {
  const double P = compton_energy(energy, omega) / energy;
  const double s = std::sin(omega);
  return 0.5 * P * P * (P + 1.0 / P - s * s);
}

KleinNishinaSampler::KleinNishinaSampler(double energy, std::size_t table_size) : energy_(energy) {
  if (!(energy > 0.0)) throw DomainError("KleinNishinaSampler: energy must be positive");
  if (table_size < 2) throw ConfigError("KleinNishinaSampler: table too small");
  omega_.resize(table_size);
  cdf_.resize(table_size);
  const double h = kPi / static_cast<double>(table_size - 1);
  double prev = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < table_size; ++i) {
    omega_[i] = h * static_cast<double>(i);
    const double f = 2.0 * kPi * klein_nishina_dcs(energy, omega_[i]) * std::sin(omega_[i]);
    if (i > 0) acc += 0.5 * h * (f + prev);
    cdf_[i] = acc;
    prev = f;
  }
  total_ = acc;
  for (double& c : cdf_) c /= total_;
}

double KleinNishinaSampler::sample(CounterRng& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const std::size_t k = std::clamp<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), 1, cdf_.size() - 1);
  const double c0 = cdf_[k - 1];
  const double c1 = cdf_[k];
  const double t = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
  return omega_[k - 1] + t * (omega_[k] - omega_[k - 1]);
}

double sample_klein_nishina(double energy, CounterRng& rng) { return KleinNishinaSampler(energy).sample(rng); }

double coherent_normalisation(double energy, const BraggPeakList& peaks, const GaussianMixtureParams& gm,
                              double hc) {
  const double q_top = energy / hc;
  const double h = std::min(0.25 * std::sqrt(gm.sigma2), q_top / 2000.0);
  const auto steps = static_cast<std::size_t>(std::ceil(q_top / h));
  const double dq = q_top / static_cast<double>(steps);
  const double c = 4.0 * (hc / energy) * (hc / energy) * 2.0 * kPi;
  auto integrand = [&](double q) {
    const double s = q * hc / energy;
    const double cw = 1.0 - 2.0 * s * s;
    return mixture_value(q, peaks, gm) * 0.5 * (1.0 + cw * cw) * q * c;
  };
  double acc = 0.5 * (integrand(0.0) + integrand(q_top));
  for (std::size_t i = 1; i < steps; ++i) acc += integrand(dq * static_cast<double>(i));
  return acc * dq;
}

Tally mc_run(const McConfig& cfg, const ScannerConfig& scanner, MaterialLibrary& materials) {
  cfg.validate();
  scanner.validate();
  const double x2 = cfg.phantom.slice_x2;
  if (!(x2 > -scanner.w_x2 && x2 < scanner.w_x2)) throw DomainError("mc_run: slice outside the scanner");
  const Scene scene = make_scene(cfg.phantom, materials);

  const std::size_t E = scanner.energies.size();
  const std::size_t S = scanner.source_x1.size();
  const std::size_t D = scanner.detector_x1.size();
  const RowIndex index = RowIndex::from(scanner);
  std::vector<std::size_t> energy_list = cfg.energy_indices;
  if (energy_list.empty())
    for (std::size_t e = 0; e < E; ++e) energy_list.push_back(e);
  for (auto e : energy_list)
    if (e >= E) throw ConfigError("mc: energy index out of range");

  Tally tally;
  tally.energies = E;
  tally.sources = S;
  tally.detectors = D;
  tally.coherent.assign(index.size(), 0);
  tally.compton.assign(index.size(), 0);
  tally.coherent_expected.assign(index.size(), 0.0);
  tally.compton_expected.assign(index.size(), 0.0);
  if (cfg.histories == 0 || cfg.photons_per_projection_per_energy == 0.0) return tally;

  // Per-energy tables shared by all jobs.
  std::vector<KleinNishinaSampler> kn;
  for (std::size_t e = 0; e < E; ++e) kn.emplace_back(scanner.energies[e]);
  std::vector<std::vector<double>> coh_norm(scene.spheres.size(), std::vector<double>(E, 0.0));
  for (std::size_t o = 0; o < scene.spheres.size(); ++o) {
    const auto& peaks = materials.get(scene.spheres[o].material).peaks;
    if (peaks.peaks.empty()) continue;
    for (auto e : energy_list)
      coh_norm[o][e] = coherent_normalisation(scanner.energies[e], peaks, materials.mixture(), scanner.hc);
  }

  const double h = x2 + scanner.w_x2;
  const double beta = scanner.beta;
  const double weight = cfg.photons_per_projection_per_energy / static_cast<double>(cfg.histories);
  const double phi_x3 = detector_height(x2, scanner);
  const double pitch = cfg.detector_pitch > 0.0
                           ? cfg.detector_pitch
                           : (D > 1 ? scanner.detector_x1[1] - scanner.detector_x1[0] : 1.0);
  const double x3_half = 0.5 * scanner.detector_area / pitch;
  const auto N = static_cast<std::ptrdiff_t>(cfg.histories);

  struct Counters {
    std::uint64_t launched = 0, scattered = 0, absorbed = 0, transmitted = 0, escaped = 0;
  };
  std::vector<Counters> per_source(S);

  auto survive = [&](Vec3 a, Vec3 b, double energy) {
    return cfg.attenuation ? transmission(a, b, energy, scene, materials) : 1.0;
  };

  // Sources are independent jobs; each writes only its own (., s, .) slots.
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(S); ++si) {
    const auto s = static_cast<std::size_t>(si);
    const double s1 = scanner.source_x1[s];
    const Vec3 sp = source_point(s1, scanner);
    Counters& c = per_source[s];
    for (const auto e : energy_list) {
      const double energy = scanner.energies[e];
      for (std::ptrdiff_t k = 0; k < N; ++k) {
        CounterRng rng(cfg.seed, {kHistory, s, e, static_cast<std::uint64_t>(k)});
        ++c.launched;
        const double phi = -0.5 * beta + beta * (static_cast<double>(k) + rng.uniform()) / static_cast<double>(N);
        const double x1 = s1 + h * std::tan(phi);
        if (std::abs(x1) > scanner.w_x1) {
          ++c.escaped;
          continue;
        }
        const Vec3 site{x1, x2, 0.0};
        if (cfg.attenuation && rng.uniform() >= survive(sp, site, energy)) {
          ++c.absorbed;
          continue;
        }
        const auto obj = scene.sphere_at(site);
        if (!obj) {
          ++c.transmitted;
          continue;
        }
        const Material& mat = materials.get(scene.spheres[*obj].material);
        const Interaction kind = sample_interaction(energy, mat.attenuation, cfg.step, rng, cfg.toggles);
        if (kind == Interaction::none) {
          ++c.transmitted;
          continue;
        }
        if (kind == Interaction::photoelectric) {
          ++c.absorbed;
          continue;
        }
        ++c.scattered;

        if (cfg.mode == McMode::forced) {
          for (std::size_t d = 0; d < D; ++d) {
            const Vec3 dp = detector_point(scanner.detector_x1[d], x2, scanner);
            const double omega_det = solid_angle({x1, x2}, dp, scanner.detector_area);
            if (!(omega_det > 0.0)) continue;
            const double theta = bragg_angle(sp, dp, {x1, x2});
            if (kind == Interaction::coherent) {
              const double norm_c = coh_norm[*obj][e];
              if (!(norm_c > 0.0)) continue;
              const double q = momentum_transfer(energy, theta, scanner.hc);
              const double f = mixture_value(q, mat.peaks, materials.mixture());
              if (f == 0.0) continue;
              const double w = f * polarization(theta) * omega_det / norm_c * survive(site, dp, energy);
              tally.coherent_expected[index.row(e, s, d)] += weight * w;
            } else {
              const double omega = 2.0 * theta;
              const double es = compton_energy(energy, omega);
              const auto bin = energy_bin(es, scanner.energies);
              if (!bin) continue;
              const double w = klein_nishina_dcs(energy, omega) * omega_det / kn[e].total() * survive(site, dp, es);
              tally.compton_expected[index.row(*bin, s, d)] += weight * w;
            }
          }
          continue;
        }

        // Literal mode: sample the outgoing direction and look for a detector hit.
        double omega = 0.0;
        double es = energy;
        if (kind == Interaction::coherent) {
          const auto w = sample_coherent_angle(energy, mat.peaks, scanner.hc, rng);
          if (!w) continue;
          omega = *w;
        } else {
          omega = kn[e].sample(rng);
          es = compton_energy(energy, omega);
        }
        const Vec3 u = normalized(site - sp);
        const Vec3 dir = rotate(u, omega, 2.0 * kPi * rng.uniform());
        if (!(dir.x2 > 0.0)) continue;
        const double t = (scanner.w_x2 - x2) / dir.x2;
        const Vec3 hit = site + t * dir;
        if (std::abs(hit.x3 - phi_x3) > x3_half) continue;
        const auto& det = scanner.detector_x1;
        auto it = std::lower_bound(det.begin(), det.end(), hit.x1);
        std::size_t d = static_cast<std::size_t>(it - det.begin());
        if (d == D || (d > 0 && hit.x1 - det[d - 1] < det[d] - hit.x1)) --d;
        if (std::abs(hit.x1 - det[d]) > 0.5 * pitch) continue;
        const auto bin = energy_bin(es, scanner.energies);
        if (!bin) continue;
        const Vec3 dp{det[d], scanner.w_x2, phi_x3};
        if (cfg.attenuation && rng.uniform() >= survive(site, dp, es)) continue;
        const std::size_t row = index.row(*bin, s, d);
        if (kind == Interaction::coherent)
          tally.coherent_expected[row] += 1.0;
        else
          tally.compton_expected[row] += 1.0;
      }
    }
  }

  for (const auto& c : per_source) {
    tally.launched += c.launched;
    tally.scattered += c.scattered;
    tally.absorbed += c.absorbed;
    tally.transmitted += c.transmitted;
    tally.escaped += c.escaped;
  }

  // Counts: Poisson draws around the forced-detection expectations.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(index.size()); ++r) {
    const auto row = static_cast<std::uint64_t>(r);
    if (cfg.mode == McMode::literal) {
      tally.coherent[r] = static_cast<std::uint64_t>(tally.coherent_expected[r]);
      tally.compton[r] = static_cast<std::uint64_t>(tally.compton_expected[r]);
      continue;
    }
    if (tally.coherent_expected[r] > 0.0) {
      CounterRng rng(cfg.seed, {kCoherentCounts, row});
      tally.coherent[r] = std::poisson_distribution<std::uint64_t>(tally.coherent_expected[r])(rng);
    }
    if (tally.compton_expected[r] > 0.0) {
      CounterRng rng(cfg.seed, {kComptonCounts, row});
      tally.compton[r] = std::poisson_distribution<std::uint64_t>(tally.compton_expected[r])(rng);
    }
  }
  return tally;
}

}  // namespace bst
