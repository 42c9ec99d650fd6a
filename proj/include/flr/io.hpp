#pragma once

// Plain-text formats.
//
// Dataset CSV:
//   # grid=midpoint p=<p>
//   x_1,...,x_p,y
//   <p + 1 numbers per row>
// Prediction inputs use the same layout; the y column is optional there.
//
// Model file:
//   method <pca|ridge>
//   parameter <m or rho>
//   intercept <a>
//   p <p>
//   <p slope values, one per line>
// All numbers are written with 17 significant digits.

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "flr/error.hpp"
#include "flr/estimators.hpp"
#include "flr/grid.hpp"

namespace flr::io {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline double parse_double(std::string_view cell, std::size_t line_no) {
  cell = trim(cell);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty()) {
    throw Error(ErrorKind::data_format, "line " + std::to_string(line_no) + ": non-numeric cell '" + std::string(cell) + "'");
  }
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

inline std::string grid_metadata(const Grid& grid) { return "# grid=midpoint p=" + std::to_string(grid.size()); }

/// Reads `# grid=midpoint p=<p>`; other key=value tokens are ignored.
inline Grid parse_grid_metadata(std::string_view line) {
  line = detail::trim(line);
  if (line.empty() || line.front() != '#') throw Error(ErrorKind::data_format, "missing '# grid=midpoint p=<p>' metadata line");
  std::istringstream is{std::string(line.substr(1))};
  std::string token;
  bool midpoint = false;
  std::optional<std::size_t> p;
  while (is >> token) {
    if (token == "grid=midpoint") {
      midpoint = true;
    } else if (token.rfind("grid=", 0) == 0) {
      throw Error(ErrorKind::data_format, "unsupported grid convention '" + token.substr(5) + "'");
    } else if (token.rfind("p=", 0) == 0) {
      std::size_t v = 0;
      const std::string_view digits(token.data() + 2, token.size() - 2);
      const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
      if (ec != std::errc{} || ptr != digits.data() + digits.size() || v < 2) {
        throw Error(ErrorKind::data_format, "bad grid size '" + token + "'");
      }
      p = v;
    }
  }
  if (!midpoint || !p) throw Error(ErrorKind::data_format, "metadata line must contain grid=midpoint and p=<p>");
  return Grid(*p);
}

inline void write_dataset_csv(std::ostream& os, const Dataset& data) {
  const std::size_t p = data.grid.size();
  os << grid_metadata(data.grid) << '\n';
  for (std::size_t j = 1; j <= p; ++j) os << "x_" << j << ',';
  os << "y\n";
  const auto old_precision = os.precision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < p; ++j) os << data.x[i][j] << ',';
    os << data.y[i] << '\n';
  }
  os.precision(old_precision);
}

struct CurveTable {
  Grid grid;
  std::vector<GridFunction> x;
  std::optional<std::vector<double>> y;
};

/// Reads curves (and responses when the y column is present).
inline CurveTable read_curves_csv(std::istream& is) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(is, line)) throw Error(ErrorKind::data_format, "empty input: missing grid metadata line");
  const Grid grid = parse_grid_metadata(line);
  const std::size_t p = grid.size();

  ++line_no;
  if (!std::getline(is, line)) throw Error(ErrorKind::data_format, "missing column header");
  const auto header = detail::split(detail::trim(line), ',');
  if (header.size() != p && header.size() != p + 1) {
    throw Error(ErrorKind::data_format, "header has " + std::to_string(header.size()) + " columns; expected " +
                                            std::to_string(p) + " or " + std::to_string(p + 1));
  }
  for (std::size_t j = 0; j < p; ++j) {
    if (detail::trim(header[j]) != "x_" + std::to_string(j + 1)) {
      throw Error(ErrorKind::data_format, "header column " + std::to_string(j + 1) + " should be x_" + std::to_string(j + 1));
    }
  }
  const bool has_y = header.size() == p + 1;
  if (has_y && detail::trim(header[p]) != "y") throw Error(ErrorKind::data_format, "last header column should be y");

  CurveTable table{grid, {}, std::nullopt};
  std::vector<double> ys;
  Eigen::VectorXd values(static_cast<Eigen::Index>(p));
  while (std::getline(is, line)) {
    ++line_no;
    const std::string_view row = detail::trim(line);
    if (row.empty() || row.front() == '#') continue;
    const auto cells = detail::split(row, ',');
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::data_format, "line " + std::to_string(line_no) + ": " + std::to_string(cells.size()) +
                                              " columns, expected " + std::to_string(header.size()));
    }
    for (std::size_t j = 0; j < p; ++j) values[static_cast<Eigen::Index>(j)] = detail::parse_double(cells[j], line_no);
    if (!values.allFinite()) throw Error(ErrorKind::data_format, "line " + std::to_string(line_no) + ": non-finite value");
    table.x.emplace_back(grid, values);
    if (has_y) ys.push_back(detail::parse_double(cells[p], line_no));
  }
  if (has_y) table.y = std::move(ys);
  return table;
}

inline Dataset read_dataset_csv(std::istream& is) {
  CurveTable t = read_curves_csv(is);
  if (!t.y) throw Error(ErrorKind::data_format, "dataset has no y column");
  return Dataset(t.grid, std::move(t.x), std::move(*t.y));
}

inline void write_model(std::ostream& os, const FittedModel& model) {
  const auto old_precision = os.precision(17);
  os << "method " << model.method.name() << '\n';
  os << "parameter " << model.method.parameter << '\n';
  os << "intercept " << model.intercept << '\n';
  os << "p " << model.slope.size() << '\n';
  for (std::size_t i = 0; i < model.slope.size(); ++i) os << model.slope[i] << '\n';
  os.precision(old_precision);
}

inline FittedModel read_model(std::istream& is) {
  auto field = [&](const char* key) {
    std::string k, v;
    if (!(is >> k >> v) || k != key) throw Error(ErrorKind::data_format, std::string("model file: expected '") + key + "' field");
    return v;
  };
  const std::string method = field("method");
  const double parameter = detail::parse_double(field("parameter"), 2);
  const double intercept = detail::parse_double(field("intercept"), 3);
  const double p_value = detail::parse_double(field("p"), 4);
  if (method != "pca" && method != "ridge") throw Error(ErrorKind::data_format, "model file: unknown method '" + method + "'");
  if (!(p_value >= 2) || p_value != static_cast<double>(static_cast<std::size_t>(p_value))) {
    throw Error(ErrorKind::data_format, "model file: bad grid size");
  }
  const Grid grid(static_cast<std::size_t>(p_value));
  Eigen::VectorXd slope(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::string cell;
    if (!(is >> cell)) throw Error(ErrorKind::data_format, "model file: expected " + std::to_string(grid.size()) + " slope values");
    slope[static_cast<Eigen::Index>(i)] = detail::parse_double(cell, 5 + i);
  }
  std::string extra;
  if (is >> extra) throw Error(ErrorKind::data_format, "model file: trailing content '" + extra + "'");
  const Method m = method == "pca" ? Method{Method::Kind::pca, parameter} : Method{Method::Kind::ridge, parameter};
  return {GridFunction(grid, std::move(slope)), intercept, m, std::nullopt};
}

/// Writes to a sibling temporary file and renames it over `path`, so readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) {
      out.close();
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw Error(ErrorKind::io, "failed writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw Error(ErrorKind::io, "cannot move output into place at '" + path.string() + "': " + ec.message());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::io, "failed reading '" + path.string() + "'");
  return ss.str();
}

}  // namespace flr::io
