#include "bst/array_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "bst/errors.hpp"

namespace bst {

namespace {

static_assert(sizeof(double) == 8 && std::numeric_limits<double>::is_iec559);

template <typename T>
void put(std::ofstream& out, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path, const char* what) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T)))
    throw IoError(path.string() + ": truncated " + what);
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

std::uint64_t checked_count(std::span<const std::uint64_t> dims) {
  if (dims.empty()) throw IoError("array rank must be at least 1");
  std::uint64_t n = 1;
  for (auto d : dims) {
    if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / 8 / d)
      throw IoError("array dimensions overflow");
    n *= d;
  }
  return n;
}

template <typename T>
void write_impl(const std::filesystem::path& path, std::span<const std::uint64_t> dims, std::span<const T> values,
                ElementType type) {
  if (checked_count(dims) != values.size()) throw DimensionError("write_array: dims do not match payload");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write("BSTA", 4);
  put<std::uint16_t>(out, kArrayVersion);
  put<std::uint16_t>(out, static_cast<std::uint16_t>(type));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) put<std::uint64_t>(out, d);
  for (const T& v : values) put<T>(out, v);
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

std::uint64_t Array::element_count() const { return checked_count(dims); }

void write_array(const std::filesystem::path& path, std::span<const std::uint64_t> dims,
                 std::span<const double> values) {
  write_impl<double>(path, dims, values, ElementType::f64);
}

void write_array(const std::filesystem::path& path, std::span<const std::uint64_t> dims,
                 std::span<const std::uint64_t> values) {
  write_impl<std::uint64_t>(path, dims, values, ElementType::u64);
}

void write_array(const std::filesystem::path& path, const Array& a) {
  if (a.type == ElementType::f64)
    write_array(path, a.dims, std::span<const double>(a.f64));
  else
    write_array(path, a.dims, std::span<const std::uint64_t>(a.u64));
}

Array read_array(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4) throw IoError(path.string() + ": truncated header");
  if (std::memcmp(magic, "BSTA", 4) != 0) throw IoError(path.string() + ": bad magic");
  const auto version = get<std::uint16_t>(in, path, "header");
  if (version != kArrayVersion) throw IoError(path.string() + ": unsupported version " + std::to_string(version));
  const auto type = get<std::uint16_t>(in, path, "header");
  if (type != 1 && type != 2) throw IoError(path.string() + ": unknown element type " + std::to_string(type));
  const auto rank = get<std::uint32_t>(in, path, "header");
  if (rank == 0) throw IoError(path.string() + ": rank 0 array");
  if (rank > 32) throw IoError(path.string() + ": implausible rank " + std::to_string(rank));
  Array a;
  a.type = static_cast<ElementType>(type);
  for (std::uint32_t i = 0; i < rank; ++i) a.dims.push_back(get<std::uint64_t>(in, path, "dimensions"));
  const std::uint64_t n = checked_count(a.dims);

  // Compare against the remaining file size before allocating.
  const auto here = in.tellg();
  in.seekg(0, std::ios::end);
  const auto end = in.tellg();
  in.seekg(here);
  const auto available = static_cast<std::uint64_t>(end - here);
  if (available < n * 8) throw IoError(path.string() + ": truncated payload");
  if (available > n * 8) throw IoError(path.string() + ": trailing bytes after payload");

  if (a.type == ElementType::f64) {
    a.f64.resize(n);
    for (auto& v : a.f64) v = get<double>(in, path, "payload");
  } else {
    a.u64.resize(n);
    for (auto& v : a.u64) v = get<std::uint64_t>(in, path, "payload");
  }
  return a;
}

}  // namespace bst
