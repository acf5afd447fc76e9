#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "edr/sample.hpp"

namespace edr {

/// Malformed dataset. Row and column are 1-based; row 1 is the header.
class CsvError : public std::runtime_error {
 public:
  CsvError(std::size_t row, std::size_t column, const std::string& what)
      : std::runtime_error("row " + std::to_string(row) + ", column " + std::to_string(column) + ": " + what),
        row_(row), column_(column) {}
  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    cells.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

}  // namespace detail

/// Parses a dataset: header `y,x1,...,xd`, then one numeric row per observation.
inline Sample parse_sample_csv(std::istream& in) {
  std::string line;
  std::size_t row = 0;
  std::size_t width = 0;
  std::vector<double> values;

  while (std::getline(in, line)) {
    ++row;
    std::string_view view(line);
    if (row == 1 && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
    if (detail::trim(view).empty()) {
      if (row == 1) throw CsvError(1, 1, "missing header row");
      continue;
    }
    const auto cells = detail::split_commas(view);
    if (row == 1) {
      if (cells.size() < 2) throw CsvError(1, cells.size() + 1, "header needs `y` and at least one predictor column");
      if (cells[0] != "y") throw CsvError(1, 1, "first column must be named `y`, found `" + std::string(cells[0]) + "`");
      for (std::size_t c = 1; c < cells.size(); ++c)
        if (cells[c] != "x" + std::to_string(c))
          throw CsvError(1, c + 1, "expected column `x" + std::to_string(c) + "`, found `" + std::string(cells[c]) + "`");
      width = cells.size();
      continue;
    }
    if (cells.size() != width)
      throw CsvError(row, std::min(cells.size(), width) + 1,
                     "expected " + std::to_string(width) + " cells, found " + std::to_string(cells.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto cell = cells[c];
      double v = 0.0;
      const auto* first = cell.data();
      const auto* last = cell.data() + cell.size();
      if (!cell.empty() && *first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (cell.empty() || ec != std::errc() || ptr != last)
        throw CsvError(row, c + 1, "non-numeric cell `" + std::string(cell) + "`");
      if (!std::isfinite(v)) throw CsvError(row, c + 1, "non-finite cell `" + std::string(cell) + "`");
      values.push_back(v);
    }
  }
  if (row == 0) throw CsvError(1, 1, "missing header row");
  const std::size_t n = width == 0 ? 0 : values.size() / width;
  if (n == 0) throw CsvError(row + 1, 1, "no observations");
  Vector y(static_cast<Eigen::Index>(n));
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width - 1));
  for (std::size_t i = 0; i < n; ++i) {
    y(static_cast<Eigen::Index>(i)) = values[i * width];
    for (std::size_t j = 1; j < width; ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - 1)) = values[i * width + j];
  }
  return Sample(std::move(y), std::move(x));
}

inline Sample read_sample_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_sample_csv(in);
}

/// Locale-independent %.17g formatting.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

inline std::string sample_to_csv(const Sample& sample) {
  std::string out = "y";
  for (Eigen::Index j = 1; j <= sample.d(); ++j) out += ",x" + std::to_string(j);
  out += '\n';
  for (Eigen::Index i = 0; i < sample.n(); ++i) {
    out += format_double(sample.y()(i));
    for (Eigen::Index j = 0; j < sample.d(); ++j) {
      out += ',';
      out += format_double(sample.x()(i, j));
    }
    out += '\n';
  }
  return out;
}

/// Writes to `path.tmp` and renames, so a failed run never leaves a partial file.
inline void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << contents;
    out.flush();
    if (!out) {
      std::remove(tmp.c_str());
      throw std::runtime_error("write failed for " + tmp);
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error("cannot rename " + tmp + " to " + path);
  }
}

}  // namespace edr
