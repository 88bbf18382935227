#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace sobonet {

// Shortest decimal that parses back to the same binary64.
std::string format_number(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
  std::string str() const;
};

void write_csv(const CsvTable& table, const std::string& path);
void write_json(const nlohmann::json& j, const std::string& path);
void write_text(const std::string& text, const std::string& path);

}  // namespace sobonet
