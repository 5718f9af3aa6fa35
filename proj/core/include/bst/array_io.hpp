#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace bst {

// Binary array file: "BSTA", u16 version, u16 element type, u32 rank, u64 dims[rank],
// then the row-major payload. Everything little-endian.

inline constexpr std::uint16_t kArrayVersion = 1;

enum class ElementType : std::uint16_t { f64 = 1, u64 = 2 };

struct Array {
  ElementType type = ElementType::f64;
  std::vector<std::uint64_t> dims;
  std::vector<double> f64;
  std::vector<std::uint64_t> u64;

  std::uint64_t element_count() const;
};

void write_array(const std::filesystem::path& path, std::span<const std::uint64_t> dims,
                 std::span<const double> values);
void write_array(const std::filesystem::path& path, std::span<const std::uint64_t> dims,
                 std::span<const std::uint64_t> values);
void write_array(const std::filesystem::path& path, const Array& array);

Array read_array(const std::filesystem::path& path);

}  // namespace bst
