#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bst/errors.hpp"
#include "bst/monte_carlo.hpp"
#include "bst/parallel.hpp"
#include "bst/phantom.hpp"
#include "bst/scene.hpp"
#include "oracles.hpp"

using namespace bst;

namespace {

std::filesystem::path data_dir() { return std::filesystem::path(BST_TEST_DATA_DIR) / "materials"; }

ScannerConfig mc_scanner() {
  auto cfg = ScannerConfig::full_scale();
  cfg.source_x1 = {-20, 0, 20};
  cfg.detector_x1 = lattice(-290, 20, 30);
  cfg.energies = {10, 15, 20, 25};
  return cfg;
}

McConfig graphite_sphere(double r, std::uint64_t histories) {
  McConfig mc;
  mc.histories = histories;
  mc.photons_per_projection_per_energy = 1e6;
  mc.phantom.objects = {{"graphite", ShapeKind::sphere, 0.0, r, 1.0}};
  return mc;
}

}  // namespace

TEST_CASE("phantom images") {
  MaterialLibrary lib(data_dir());
  lib.load("NaCl");
  lib.load("graphite");
  const auto grid = ImageGrid::uniform(300, 0, 2, 600, -300, 300);
  PhantomSpec p1;
  p1.objects = parse_objects("NaCl:interval:-75:20;graphite:interval:75:20");
  const auto img = make_phantom_image(p1, grid, lib);
  double peak = 0.0;
  for (double v : img.image.data) peak = std::max(peak, v);
  CHECK(peak == doctest::Approx(1.0));
  for (std::size_t j = 0; j < grid.m(); ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < grid.n(); ++i) col += img.image(i, j);
    const double x = grid.x1_values[j];
    const bool inside = std::abs(x + 75.0) <= 10.0 || std::abs(x - 75.0) <= 10.0;
    CHECK((col > 0.0) == inside);
  }
  CHECK(img.spectra.size() == 2);

  PhantomSpec p2;
  p2.objects = parse_objects("NaCl:interval:-72.5:12.5;NaCl:interval:77.5:12.5");
  const auto img2 = make_phantom_image(p2, grid, lib);
  std::size_t cols = 0;
  for (std::size_t j = 0; j < grid.m(); ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < grid.n(); ++i) col += img2.image(i, j);
    if (col > 0.0) ++cols;
  }
  CHECK(cols == 24);

  const auto empty = make_phantom_image(PhantomSpec{}, grid, lib);
  for (double v : empty.image.data) CHECK(v == 0.0);
  PhantomSpec unknown;
  unknown.objects = parse_objects("unobtainium:interval:0:10");
  CHECK_THROWS_AS(make_phantom_image(unknown, grid, lib), ConfigError);
  CHECK(format_objects(parse_objects("NaCl:sphere:0:15:0.5")) == "NaCl:sphere:0:15:0.5");
  CHECK_THROWS_AS(parse_objects("NaCl:cube:0:1"), ConfigError);
}

TEST_CASE("analytic Poisson data") {
  const auto s = test::gradient_instance();
  const auto mean = analytic_mean(s.A, s.image, 10.0);
  double total = 0.0;
  for (double v : mean) total += v;
  CHECK(total == doctest::Approx(10.0 * mean.size()).epsilon(1e-12));
  const int draws = 10000;
  std::vector<double> acc(mean.size(), 0.0);
  for (int k = 0; k < draws; ++k) {
    const auto b = analytic_data(s.A, s.image, 10.0, 1000 + k);
    for (std::size_t r = 0; r < acc.size(); ++r) acc[r] += b.values[r];
  }
  std::size_t outside = 0;
  for (std::size_t r = 0; r < acc.size(); ++r) {
    const double se = std::sqrt(mean[r] / draws);
    if (std::abs(acc[r] / draws - mean[r]) > 3.0 * se) ++outside;
    CHECK(std::abs(acc[r] / draws - mean[r]) <= 4.5 * se + 1e-12);
  }
  // Under the null about 0.27% of bins leave 3 standard errors.
  CHECK(outside <= 3);
  const auto a = analytic_data(s.A, s.image, 10.0, 7);
  const auto b = analytic_data(s.A, s.image, 10.0, 7);
  CHECK(a.values == b.values);
  CHECK_THROWS_AS(analytic_data(s.A, Matrix(s.grid.n(), s.grid.m()), 10.0, 1), DomainError);
}

TEST_CASE("ray chords") {
  Scene scene;
  scene.spheres.push_back({"m", {0, 0, 0}, 10.0});
  const auto hit = ray_lengths({0, -100, 0}, {0, 1, 0}, scene);
  REQUIRE(hit.size() == 1);
  CHECK(hit[0].length == doctest::Approx(20.0));
  CHECK(ray_lengths({50, -100, 0}, {0, 1, 0}, scene).empty());
  CHECK_THROWS_AS(ray_lengths({0, 0, 0}, {0, 2, 0}, scene), DomainError);
  for (double b : {0.0, 3.0, 7.5, 9.9}) {
    const Vec3 o{b, -100, 0};
    const Vec3 d{0, 1, 0};
    const auto c = ray_lengths(o, d, scene);
    const double marched = test::marched_length(
        o, d, [&](Vec3 p) { return dot(p, p) <= 100.0; }, 200.0, 0.01);
    CHECK(c[0].length == doctest::Approx(2.0 * std::sqrt(100.0 - b * b)).epsilon(1e-12));
    CHECK(std::abs(c[0].length - marched) < 1e-6);
  }
  // Oblique ray and clutter box with the sphere carved out.
  scene.clutter = Box{"box", {-50, -50, -50}, {50, 50, 50}};
  const Vec3 o{-80, -90, 5};
  const Vec3 d = (1.0 / norm(Vec3{1, 1, 0})) * Vec3{1, 1, 0};
  const auto c = ray_lengths(o, d, scene);
  REQUIRE(c.size() == 2);
  const double sphere = test::marched_length(o, d, [&](Vec3 p) { return dot(p, p) <= 100.0; }, 300.0, 0.01);
  const double box = test::marched_length(
      o, d,
      [&](Vec3 p) { return scene.clutter->contains(p) && dot(p, p) > 100.0; }, 300.0, 0.01);
  CHECK(std::abs(c[0].length - sphere) < 1e-6);
  CHECK(std::abs(c[1].length - box) < 1e-6);
  const auto seg = segment_lengths({0, -100, 0}, {0, 0, 0}, Scene{{{"m", {0, 0, 0}, 10.0}}, {}});
  CHECK(seg[0].length == doctest::Approx(10.0));
}

TEST_CASE("interaction sampling") {
  const AttenuationTable zero("z", {{1, 0, 0, 0}, {30, 0, 0, 0}});
  CounterRng rng(1, {1});
  for (int k = 0; k < 1000; ++k) CHECK(sample_interaction(10.0, zero, 1.0, rng) == Interaction::none);

  const AttenuationTable equal("e", {{1, 0.2, 0.2, 0.2}, {30, 0.2, 0.2, 0.2}});
  const double mu = 0.6;
  const double step = 1.0;
  const double p_ni = std::exp(-mu * step);
  const double probs[4] = {p_ni, (1 - p_ni) / 3, (1 - p_ni) / 3, (1 - p_ni) / 3};
  const int N = 1000000;
  int counts[4] = {0, 0, 0, 0};
  CounterRng r2(2, {7});
  for (int k = 0; k < N; ++k) ++counts[static_cast<int>(sample_interaction(10.0, equal, step, r2))];
  for (int c = 0; c < 4; ++c) {
    const double sigma = std::sqrt(N * probs[c] * (1 - probs[c]));
    CHECK(std::abs(counts[c] - N * probs[c]) < 4.0 * sigma);
  }
  int off = 0;
  InteractionToggles only_coh{false, false, true};
  for (int k = 0; k < 10000; ++k) {
    const auto i = sample_interaction(10.0, equal, step, r2, only_coh);
    if (i != Interaction::none && i != Interaction::coherent) ++off;
  }
  CHECK(off == 0);
}

TEST_CASE("coherent angle and Compton kinematics") {
  const double E = 20.0;
  const double hc = 12.398;
  BraggPeakList one{"one", {{0.5 * E / hc, 1.0}}, 2.0};
  CounterRng rng(3, {1});
  for (int k = 0; k < 100; ++k) {
    const auto w = sample_coherent_angle(E, one, hc, rng);
    REQUIRE(w.has_value());
    CHECK(*w == doctest::Approx(std::numbers::pi / 3).epsilon(1e-14));
  }
  BraggPeakList far{"far", {{1.9, 1.0}}, 2.0};
  CHECK_FALSE(sample_coherent_angle(5.0, far, hc, rng).has_value());
  CHECK(compton_energy(29.0, std::numbers::pi / 2) == doctest::Approx(29.0 / (1.0 + 29.0 / 511.0)));
  CHECK(compton_energy(29.0, std::numbers::pi / 2) == doctest::Approx(27.44).epsilon(2e-4));
  CHECK(compton_energy(29.0, 0.0) == 29.0);
  for (double w = 0.1; w < 3.1; w += 0.3) CHECK(compton_energy(20.0, w) < 20.0);
}

TEST_CASE("Klein-Nishina sampler reproduces the analytic density") {
  const double E = 25.0;
  const KleinNishinaSampler kn(E);
  const int bins = 60;
  const long N = 10000000;
  std::vector<double> hist(bins, 0.0);
  CounterRng rng(11, {2});
  for (long k = 0; k < N; ++k) {
    const double w = kn.sample(rng);
    hist[std::min(bins - 1, static_cast<int>(w / std::numbers::pi * bins))] += 1.0;
  }
  // Exact bin probabilities from a fine quadrature of 2 pi sin(w) dsigma/dOmega.
  std::vector<double> prob(bins, 0.0);
  double total = 0.0;
  const int sub = 2000;
  for (int b = 0; b < bins; ++b)
    for (int s = 0; s < sub; ++s) {
      const double w = (b + (s + 0.5) / sub) * std::numbers::pi / bins;
      const double v = 2 * std::numbers::pi * klein_nishina_dcs(E, w) * std::sin(w);
      prob[b] += v;
      total += v;
    }
  double sup = 0.0;
  double peak = 0.0;
  for (int b = 0; b < bins; ++b) {
    prob[b] /= total;
    sup = std::max(sup, std::abs(hist[b] / N - prob[b]));
    peak = std::max(peak, prob[b]);
  }
  CHECK(sup / peak < 0.01);
  // Total cross section: 8 pi / 3 in the Thomson limit, slightly less at 25 keV.
  CHECK(kn.total() < 8.0 * std::numbers::pi / 3.0);
  CHECK(kn.total() > 0.9 * 8.0 * std::numbers::pi / 3.0);
}

TEST_CASE("Monte Carlo tallies") {
  MaterialLibrary lib(data_dir());
  const auto scanner = mc_scanner();

  SUBCASE("zero photons give an empty tally") {
    auto mc = graphite_sphere(10, 0);
    const auto t = mc_run(mc, scanner, lib);
    CHECK(t.launched == 0);
    for (auto v : t.coherent) CHECK(v == 0);
    for (auto v : t.compton) CHECK(v == 0);
  }

  SUBCASE("conservation and channel energies") {
    auto mc = graphite_sphere(15, 20000);
    mc.photons_per_projection_per_energy = 1e10;
    mc.energy_indices = {2};
    const auto t = mc_run(mc, scanner, lib);
    CHECK(t.launched == 20000ULL * scanner.source_x1.size());
    CHECK(t.scattered + t.absorbed + t.transmitted + t.escaped == t.launched);
    CHECK(t.scattered > 0);
    const RowIndex idx = RowIndex::from(scanner);
    std::uint64_t coh = 0;
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const auto e = idx.key(r).energy;
      if (e != 2) CHECK(t.coherent[r] == 0);
      if (e > 2) CHECK(t.compton[r] == 0);
      coh += t.coherent[r];
    }
    CHECK(coh > 0);
    const auto sino = t.to_sinogram(scanner, 0.0);
    CHECK(sino.provenance == Provenance::monte_carlo);
    CHECK_NOTHROW(sino.validate());
  }

  SUBCASE("identical results for any thread count") {
    auto mc = graphite_sphere(12, 5000);
    mc.phantom.clutter = ClutterSpec{};
    set_threads(1);
    const auto a = mc_run(mc, scanner, lib);
    set_threads(3);
    const auto b = mc_run(mc, scanner, lib);
    set_threads(0);
    CHECK(a.coherent == b.coherent);
    CHECK(a.compton == b.compton);
    CHECK(a.coherent_expected == b.coherent_expected);
    CHECK(a.launched == b.launched);
  }

  SUBCASE("doubling the photon budget doubles the expectations") {
    auto mc = graphite_sphere(10, 4000);
    const auto a = mc_run(mc, scanner, lib);
    mc.photons_per_projection_per_energy *= 2.0;
    const auto b = mc_run(mc, scanner, lib);
    for (std::size_t r = 0; r < a.coherent_expected.size(); ++r)
      CHECK(b.coherent_expected[r] == doctest::Approx(2.0 * a.coherent_expected[r]).epsilon(1e-12));
  }

  SUBCASE("attenuation only removes signal") {
    auto mc = graphite_sphere(15, 20000);
    mc.energy_indices = {1};
    const auto with = mc_run(mc, scanner, lib);
    mc.attenuation = false;
    const auto without = mc_run(mc, scanner, lib);
    double s_with = 0.0;
    double s_without = 0.0;
    for (std::size_t r = 0; r < with.coherent_expected.size(); ++r) {
      s_with += with.coherent_expected[r];
      s_without += without.coherent_expected[r];
    }
    CHECK(s_with < s_without);
  }

  SUBCASE("invalid configurations") {
    auto mc = graphite_sphere(10, 10);
    mc.step = 0.0;
    CHECK_THROWS_AS(mc_run(mc, scanner, lib), ConfigError);
    mc = graphite_sphere(200, 10);
    CHECK_THROWS_AS(mc_run(mc, scanner, lib), ConfigError);
    mc = graphite_sphere(10, 10);
    mc.energy_indices = {9};
    CHECK_THROWS_AS(mc_run(mc, scanner, lib), ConfigError);
  }
}
