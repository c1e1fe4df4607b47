#pragma once

#include "poincare/common.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace poincare {

nlohmann::json to_json_vector(const Vector& v);
Vector from_json_vector(const nlohmann::json& j);
nlohmann::json to_json_matrix(const Matrix& m);  // row-major nested arrays
Matrix from_json_matrix(const nlohmann::json& j);

void write_json_file(const nlohmann::json& j, const std::string& path);
nlohmann::json read_json_file(const std::string& path);

struct CsvTable {
  std::vector<std::string> header;  // empty when the file has none
  Matrix values;
};

/// Reads a numeric table separated by commas or whitespace. A first line
/// that does not parse as numbers is taken as the header.
CsvTable read_csv(const std::string& path);

/// Writes rows with 17 significant digits.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Matrix& values);

}  // namespace poincare
