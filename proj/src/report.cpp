#include "sobonet/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "sobonet/errors.hpp"

namespace sobonet {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void CsvTable::add(std::vector<std::string> row) {
  if (row.size() != header.size()) throw InvalidInput("CSV row width does not match the header");
  rows.push_back(std::move(row));
}

namespace {

void append_cell(std::string& s, const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) {
    s += cell;
    return;
  }
  s += '"';
  for (char c : cell) {
    if (c == '"') s += '"';
    s += c;
  }
  s += '"';
}

}  // namespace

std::string CsvTable::str() const {
  std::string s;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) s += ',';
      append_cell(s, cells[i]);
    }
    s += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return s;
}

void write_text(const std::string& text, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  os << text;
  if (!os) throw std::runtime_error("failed writing '" + path + "'");
}

void write_csv(const CsvTable& table, const std::string& path) { write_text(table.str(), path); }

void write_json(const nlohmann::json& j, const std::string& path) { write_text(j.dump(2) + "\n", path); }

}  // namespace sobonet
