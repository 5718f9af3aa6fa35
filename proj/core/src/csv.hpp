#pragma once

// Minimal numeric CSV reader shared by the table loaders.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "bst/errors.hpp"

namespace bst::detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(std::string_view field, const std::string& where) {
  double v = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || field.empty())
    throw IoError(where + ": cannot parse number '" + std::string(field) + "'");
  return v;
}

/// Rows of numbers below a mandatory header. Blank lines and `#` comments are skipped.
inline std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path,
                                                         const std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = trim(line);
    if (line_no == 1 && view.size() >= 3 && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
    if (view.empty() || view.front() == '#') continue;
    const auto fields = split(view);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (!have_header) {
      if (fields.size() != header.size()) throw IoError(where + ": unexpected header");
      for (std::size_t i = 0; i < header.size(); ++i)
        if (fields[i] != header[i])
          throw IoError(where + ": expected column '" + header[i] + "'");
      have_header = true;
      continue;
    }
    if (fields.size() != header.size())
      throw IoError(where + ": expected " + std::to_string(header.size()) + " columns");
    std::vector<double> row;
    row.reserve(fields.size());
    for (auto f : fields) row.push_back(parse_double(f, where));
    rows.push_back(std::move(row));
  }
  if (!have_header) throw IoError(path.string() + ": missing header");
  return rows;
}

}  // namespace bst::detail
