#ifndef STORYSIM_CSV_HPP
#define STORYSIM_CSV_HPP

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "storysim/bayesnet.hpp"
#include "storysim/errors.hpp"

namespace storysim {

// Minimal strict CSV: comma separator, no quoting or escaping, one header
// row, empty cell = missing value. Lines starting with '#' are comments
// (histogram files carry metadata that way).
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(std::string_view name) const {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return static_cast<int>(k);
    return -1;
  }
};

// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

namespace detail {

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(ch);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

}  // namespace detail

inline Table read_csv(std::istream& in, const std::string& origin = "<stream>") {
  Table table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cells = detail::split_line(line);
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size())
      throw DataError(origin + ":" + std::to_string(line_no) + ": row has " +
                      std::to_string(cells.size()) + " cells, header has " +
                      std::to_string(table.header.size()));
    table.rows.push_back(std::move(cells));
  }
  if (table.header.empty()) throw DataError(origin + ": no header row");
  return table;
}

inline Table read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_csv(in, path);
}

inline void write_csv(std::ostream& out, const Table& table,
                      const std::vector<std::string>& comments = {}) {
  auto check_cell = [](const std::string& cell) {
    if (cell.find(',') != std::string::npos || cell.find('\n') != std::string::npos)
      throw std::invalid_argument("cell contains a separator or newline: " + cell);
  };
  for (const std::string& c : comments) out << "# " << c << "\n";
  for (std::size_t k = 0; k < table.header.size(); ++k) {
    check_cell(table.header[k]);
    out << table.header[k] << (k + 1 < table.header.size() ? "," : "");
  }
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      check_cell(row[k]);
      out << row[k] << (k + 1 < row.size() ? "," : "");
    }
    out << "\n";
  }
}

inline void write_csv_file(const std::string& path, const Table& table,
                           const std::vector<std::string>& comments = {}) {
  std::ofstream out(path, std::ios::binary);  // binary keeps digests platform-stable
  if (!out) throw DataError("cannot open " + path + " for writing");
  write_csv(out, table, comments);
  if (!out) throw DataError("write failed: " + path);
}

// Survey table -> observation rows. Header names must map onto the graph's
// variables; cells are state labels; empty cells are missing values.
inline std::vector<Observation> observations_from_table(const Table& table, const Dag& dag) {
  std::vector<int> var_of_column(table.header.size(), -1);
  std::vector<bool> seen(static_cast<std::size_t>(dag.size()), false);
  for (std::size_t k = 0; k < table.header.size(); ++k) {
    int v = dag.index_of(table.header[k]);
    if (v < 0)
      throw DataError("column '" + table.header[k] + "' does not match any graph variable");
    if (seen[static_cast<std::size_t>(v)])
      throw DataError("column '" + table.header[k] + "' appears twice");
    seen[static_cast<std::size_t>(v)] = true;
    var_of_column[k] = v;
  }
  for (int v = 0; v < dag.size(); ++v)
    if (!seen[static_cast<std::size_t>(v)])
      throw DataError("graph variable '" + dag.variables[v].name + "' has no survey column");

  std::vector<Observation> data;
  data.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    Observation o(static_cast<std::size_t>(dag.size()));
    for (std::size_t k = 0; k < table.header.size(); ++k) {
      const std::string& cell = table.rows[r][k];
      if (cell.empty()) continue;
      int v = var_of_column[k];
      int s = dag.variables[v].state_index(cell);
      if (s < 0)
        throw DataError("row " + std::to_string(r + 1) + ", column '" + table.header[k] +
                        "': unknown state label '" + cell + "'");
      o.set(v, s);
    }
    data.push_back(std::move(o));
  }
  return data;
}

}  // namespace storysim

#endif
