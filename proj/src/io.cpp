#include "poincare/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace poincare {

using nlohmann::json;

json to_json_vector(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector from_json_vector(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(),
                                  static_cast<long>(values.size()));
}

json to_json_matrix(const Matrix& m) {
  json rows = json::array();
  for (long i = 0; i < m.rows(); ++i) {
    rows.push_back(to_json_vector(m.row(i).transpose()));
  }
  return rows;
}

Matrix from_json_matrix(const json& j) {
  const long rows = static_cast<long>(j.size());
  if (rows == 0) return Matrix();
  const long cols = static_cast<long>(j.at(0).size());
  Matrix m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    if (static_cast<long>(j.at(i).size()) != cols) {
      throw Error("ragged matrix in JSON");
    }
    m.row(i) = from_json_vector(j.at(i)).transpose();
  }
  return m;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed for '" + path + "'");
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("'" + path + "': " + e.what());
  }
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char ch : line) {
    if (ch == ',' || ch == ' ' || ch == '\t' || ch == '\r') {
      if (!current.empty()) fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  if (!current.empty()) fields.push_back(std::move(current));
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  CsvTable table;
  std::vector<double> flat;
  long cols = -1;
  long rows = 0;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_fields(line);
    if (fields.empty()) continue;
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t k = 0; k < fields.size() && numeric; ++k) {
      numeric = parse_double(fields[k], row[k]);
    }
    if (!numeric) {
      if (rows == 0 && table.header.empty()) {
        table.header = std::move(fields);
        continue;
      }
      throw Error("'" + path + "' line " + std::to_string(line_no) +
                  ": non-numeric field");
    }
    if (cols < 0) cols = static_cast<long>(row.size());
    if (static_cast<long>(row.size()) != cols) {
      throw Error("'" + path + "' line " + std::to_string(line_no) +
                  ": expected " + std::to_string(cols) + " columns");
    }
    flat.insert(flat.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows == 0) throw Error("'" + path + "': no data rows");
  table.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                Eigen::Dynamic, Eigen::RowMajor>>(
      flat.data(), rows, cols);
  return table;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Matrix& values) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  for (std::size_t k = 0; k < header.size(); ++k) {
    out << (k ? "," : "") << header[k];
  }
  if (!header.empty()) out << '\n';
  out.precision(17);
  for (long i = 0; i < values.rows(); ++i) {
    for (long j = 0; j < values.cols(); ++j) {
      out << (j ? "," : "") << values(i, j);
    }
    out << '\n';
  }
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace poincare
