#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "plapdpp/core.hpp"
#include "plapdpp/geometry.hpp"

namespace plapdpp {

/// Shortest decimal text that reads back to the same double (17 significant digits).
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// A CSV table with a header row; cells are numbers, integers or text.
class CsvTable {
 public:
  using Cell = std::variant<double, long long, std::string>;

  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<Cell> row) {
    if (row.size() != header_.size())
      throw Error(ErrorKind::InvalidInput, "row width does not match the header");
    rows_.push_back(std::move(row));
  }

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<Cell>>& rows() const { return rows_; }

  std::string to_string() const {
    std::ostringstream out;
    write_line(out, header_);
    for (const auto& row : rows_) {
      std::vector<std::string> text;
      text.reserve(row.size());
      for (const auto& c : row) text.push_back(cell_text(c));
      write_line(out, text);
    }
    return out.str();
  }

  void write(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for writing");
    f << to_string();
    if (!f) throw Error(ErrorKind::IoError, "write to '" + path + "' failed");
  }

 private:
  static std::string cell_text(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    return std::get<std::string>(c);
  }

  static void write_line(std::ostream& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << cells[i];
    }
    out << '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<Cell>> rows_;
};

/// Parsed CSV: header plus raw text cells.
struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline CsvData read_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  CsvData data;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
      if (ch == ',') {
        out.push_back(cur);
        cur.clear();
      } else if (ch != '\r') {
        cur += ch;
      }
    }
    out.push_back(cur);
    return out;
  };
  if (std::getline(f, line)) data.header = split(line);
  while (std::getline(f, line))
    if (!line.empty()) data.rows.push_back(split(line));
  return data;
}

/// Values of a field as CSV rows (coordinates..., value) over the support.
template <std::size_t D>
CsvTable field_table(const LatticeField<D>& field) {
  std::vector<std::string> header;
  for (std::size_t i = 0; i < D; ++i) header.push_back(i < 3 ? std::string(1, "xyz"[i]) : "x" + std::to_string(i));
  header.push_back("value");
  CsvTable t(header);
  for (std::size_t lin : field.support()) {
    const Point<D> x = field.point(lin);
    std::vector<CsvTable::Cell> row(x.begin(), x.end());
    row.emplace_back(field.values()[lin]);
    t.add_row(std::move(row));
  }
  return t;
}

namespace detail {

template <class T>
void put_le(std::ostream& out, T v) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!in) throw Error(ErrorKind::IoError, "truncated grid file");
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

}  // namespace detail

/// Dense grid read back from the binary format.
template <std::size_t D>
struct GridData {
  double h = 0.0;
  Point<D> origin{};                    ///< position of the first node
  std::array<std::uint64_t, D> extents{};
  std::vector<double> values;           ///< row-major, last axis fastest; NaN off the support
};

/// Binary grid: u32 d, f64 h, f64 origin[d], u64 extents[d], then row-major
/// little-endian f64 values (NaN for nodes outside the support).
template <std::size_t D>
void write_grid(const LatticeField<D>& field, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for writing");
  detail::put_le<std::uint32_t>(f, static_cast<std::uint32_t>(D));
  detail::put_le<double>(f, field.lattice().h);
  const Point<D> first = field.lattice().point(field.lo());
  for (double c : first) detail::put_le<double>(f, c);
  for (auto e : field.extents()) detail::put_le<std::uint64_t>(f, e);
  for (std::size_t lin = 0; lin < field.dense_size(); ++lin)
    detail::put_le<double>(f, field.cell(lin) == Cell::None
                                  ? std::numeric_limits<double>::quiet_NaN()
                                  : field.values()[lin]);
  if (!f) throw Error(ErrorKind::IoError, "write to '" + path + "' failed");
}

template <std::size_t D>
GridData<D> read_grid(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  GridData<D> g;
  if (detail::get_le<std::uint32_t>(f) != D)
    throw Error(ErrorKind::IoError, "grid dimension mismatch");
  g.h = detail::get_le<double>(f);
  for (auto& c : g.origin) c = detail::get_le<double>(f);
  std::uint64_t total = 1;
  for (auto& e : g.extents) {
    e = detail::get_le<std::uint64_t>(f);
    total *= e;
  }
  g.values.resize(total);
  for (auto& v : g.values) v = detail::get_le<double>(f);
  return g;
}

}  // namespace plapdpp
