// Writes powder Bragg peak tables for the bundled crystals.
#include <cstdio>
#include <filesystem>
#include <string>

#include "bst/materials.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: make_peak_tables <out_dir>\n");
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  std::filesystem::create_directories(dir);
  const double q_max = 2.0;
  const struct {
    const char* id;
    bst::UnitCell cell;
  } crystals[] = {
      {"NaCl", bst::UnitCell::sodium_chloride()},
      {"diamond", bst::UnitCell::diamond()},
      {"graphite", bst::UnitCell::graphite()},
  };
  for (const auto& c : crystals) {
    auto peaks = bst::powder_peaks(c.cell, c.id, q_max);
    bst::save_peak_list(dir / (std::string(c.id) + ".peaks.csv"), peaks);
    std::printf("%s: %zu peaks\n", c.id, peaks.peaks.size());
  }
  return 0;
}
