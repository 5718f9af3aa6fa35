#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>

#include "bst/array_io.hpp"
#include "bst/config.hpp"
#include "bst/errors.hpp"
#include "bst/experiment.hpp"
#include "bst/parallel.hpp"
#include "bst/sparse.hpp"

using namespace bst;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "bst_unit_io";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string tiny_config(const fs::path& out) {
  return std::string(R"(
[experiment]
name = tiny
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
lambdas_2dbsr = 1
lambdas_ftv = 1
outer_iterations = 3
inner_iterations = 10
ftv_iterations = 30
warmup_iterations = 2
[data]
source = analytic
eta_c = 10
seed = 3
[phantom]
objects = NaCl:interval:-30:20;graphite:interval:30:20
materials_dir = )") + (fs::path(BST_TEST_DATA_DIR) / "materials").string() + R"(
[output]
dir = )" + out.string() + "\n";
}

}  // namespace

TEST_CASE("array files round trip exactly") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  std::vector<double> v(2 * 3 * 4);
  for (double& x : v) x = u(rng);
  v[5] = -0.0;
  v[6] = 1e-310;
  const std::vector<std::uint64_t> dims{2, 3, 4};
  write_array(scratch("f.bsta"), dims, v);
  const auto a = read_array(scratch("f.bsta"));
  CHECK(a.type == ElementType::f64);
  CHECK(a.dims == dims);
  CHECK(std::memcmp(a.f64.data(), v.data(), v.size() * 8) == 0);
  std::vector<std::uint64_t> w{0, 1, ~0ULL, 42};
  const std::vector<std::uint64_t> d2{4};
  write_array(scratch("u.bsta"), d2, w);
  CHECK(read_array(scratch("u.bsta")).u64 == w);
  const auto bytes = slurp(scratch("u.bsta"));
  CHECK(bytes.substr(0, 4) == "BSTA");
  CHECK(bytes.size() == 4 + 2 + 2 + 4 + 8 + 4 * 8);
}

TEST_CASE("array file errors") {
  CHECK_THROWS_AS(write_array(scratch("r0.bsta"), std::vector<std::uint64_t>{}, std::vector<double>{}), IoError);
  CHECK_THROWS_AS(write_array(scratch("m.bsta"), std::vector<std::uint64_t>{3}, std::vector<double>{1, 2}),
                  DimensionError);
  {
    std::ofstream out(scratch("rank0.bsta"), std::ios::binary);
    const char header[] = {'B', 'S', 'T', 'A', 1, 0, 1, 0, 0, 0, 0, 0};
    out.write(header, sizeof header);
  }
  CHECK_THROWS_AS(read_array(scratch("rank0.bsta")), IoError);
  const std::vector<double> v(100, 1.5);
  write_array(scratch("t.bsta"), std::vector<std::uint64_t>{100}, v);
  const auto full = slurp(scratch("t.bsta"));
  {
    std::ofstream out(scratch("t.bsta"), std::ios::binary);
    out.write(full.data(), static_cast<std::streamsize>(full.size() - 13));
  }
  CHECK_THROWS_WITH_AS(read_array(scratch("t.bsta")), doctest::Contains("truncated"), IoError);
  {
    std::ofstream out(scratch("bad.bsta"), std::ios::binary);
    out << "XXXX" << full.substr(4);
  }
  CHECK_THROWS_AS(read_array(scratch("bad.bsta")), IoError);
  CHECK_THROWS_AS(read_array(scratch("missing.bsta")), IoError);
}

TEST_CASE("sparse matrix assembly") {
  const auto m = CsrMatrix::from_triplets(2, 3, {{0, 2, 1.0}, {1, 0, 2.0}, {0, 2, 0.5}, {0, 0, 3.0}});
  CHECK(m.nnz() == 3);
  CHECK(m.to_dense() == std::vector<double>{3, 0, 1.5, 2, 0, 0});
  const auto t = m.transposed();
  CHECK(t.to_dense() == std::vector<double>{3, 2, 0, 0, 1.5, 0});
  std::vector<double> y(3);
  m.apply_transpose(std::vector<double>{1, 1}, y);
  CHECK(y == std::vector<double>{5, 0, 1.5});
}

TEST_CASE("deterministic reductions do not depend on the thread count") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> v(100003);
  for (double& x : v) x = u(rng) * std::pow(10.0, 8 * u(rng));
  set_threads(1);
  const double a = deterministic_sum(v);
  const double da = deterministic_dot(v, v);
  set_threads(4);
  const double b = deterministic_sum(v);
  const double db = deterministic_dot(v, v);
  set_threads(0);
  CHECK(a == b);
  CHECK(da == db);
}

TEST_CASE("configuration files") {
  const auto cfg = parse_config(tiny_config(scratch("tiny_out")));
  CHECK(cfg.name == "tiny");
  CHECK(cfg.scanner.source_x1 == std::vector<double>{-100, 0, 100});
  CHECK(cfg.grid.q_bins == 40);
  CHECK(cfg.recon.methods == std::vector<std::string>{"2dbsr", "ftv"});
  CHECK(cfg.recon.params.warmup == 2);
  const auto text = render_config(cfg);
  CHECK(render_config(parse_config(text)) == text);

  CHECK_THROWS_WITH_AS(parse_config("[grid]\nq_binz = 3\n"), doctest::Contains("q_binz"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid]\nq_bins = many\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[recon]\nmethods = magic\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[scanner]\nenergy_count = 0\n"), ConfigError);
  CHECK(parse_double_list("0.1, 1,10") == std::vector<double>{0.1, 1, 10});
  CHECK(parse_index_list("3,5") == std::vector<std::size_t>{3, 5});

  for (const char* name : {"desk_phantom1.ini", "full_phantom1.ini"}) {
    const auto c = load_config(fs::path(BST_TEST_CONFIG_DIR) / name);
    CHECK(fs::exists(c.materials_dir / "NaCl.atten.csv"));
  }
  const auto desk = load_config(fs::path(BST_TEST_CONFIG_DIR) / "desk_phantom1.ini");
  CHECK(desk.grid.q_bins == 150);
  CHECK(desk.grid.x1_pixels == 120);
  CHECK(desk.scanner.source_x1.size() == 11);
  CHECK(desk.scanner.detector_x1.size() == 120);
  CHECK(desk.scanner.energies.size() == 29);
  CHECK(desk.data.eta_c == 10.0);
}

TEST_CASE("artifact round trips") {
  auto cfg = parse_config(tiny_config(scratch("tiny_out")));
  const auto A = build_operator(cfg);
  write_operator(scratch("op"), A);
  const auto B = read_operator(scratch("op"));
  CHECK(B.matrix().values() == A.matrix().values());
  CHECK(B.matrix().col_idx() == A.matrix().col_idx());
  CHECK(B.row_index() == A.row_index());
  CHECK(B.grid().q_values == A.grid().q_values);

  Matrix m(3, 2);
  for (std::size_t k = 0; k < 6; ++k) m.data[k] = 0.1 * static_cast<double>(k);
  write_matrix(scratch("m.bsta"), m);
  const auto back = read_matrix(scratch("m.bsta"));
  CHECK(back.rows == 3);
  CHECK(back.data == m.data);

  Sinogram s{std::vector<double>(A.rows(), 2.0), A.row_index(), 0.0, Provenance::analytic};
  s.values[7] = 11.0;
  write_sinogram(scratch("sino"), s);
  const auto t = read_sinogram(scratch("sino"));
  CHECK(t.values == s.values);
  CHECK(t.row_index == s.row_index);
  CHECK(t.provenance == s.provenance);
}

TEST_CASE("experiment run writes comparable outputs and reruns byte for byte") {
  const auto out = scratch("run");
  fs::remove_all(out);
  auto cfg = parse_config(tiny_config(out));
  const std::vector<std::string> files{"results.csv", "manifest.json", "2dbsr_image.bsta", "ftv_image.bsta",
                                       "2dbsr_trace.csv", "sinogram.bsta", "sinogram_filtered.bsta", "truth.bsta"};
  cfg.threads = 1;
  const auto r1 = run_experiment(cfg);
  std::vector<std::string> first;
  for (const auto& f : files) {
    REQUIRE(fs::exists(out / f));
    first.push_back(slurp(out / f));
  }
  cfg.threads = 3;
  run_experiment(cfg);
  set_threads(0);
  for (std::size_t k = 0; k < files.size(); ++k) CHECK(slurp(out / files[k]) == first[k]);
  REQUIRE(r1.records.size() == 2);
  CHECK(r1.records[0].method == "2dbsr");
  CHECK(r1.records[1].method == "ftv");
  CHECK(r1.eta_ls > 0.0);
  std::ifstream in(out / "results.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "experiment,method,stage,f1,eta_ls,lambda");
}
