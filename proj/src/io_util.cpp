#include "flownet/io_util.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace flownet {

void write_matrix_csv(const std::string& path, const MatX& m) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ParseError("cannot write matrix file: " + path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      std::fprintf(f, "%s%.17g", j == 0 ? "" : ",", m(i, j));
    std::fprintf(f, "\n");
  }
  std::fclose(f);
}

MatX read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open matrix file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError("ragged matrix file: " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return MatX(0, 0);
  MatX m(rows.size(), rows.front().size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ParseError("cannot write csv file: " + path);
  for (size_t j = 0; j < header.size(); ++j)
    std::fprintf(f, "%s%s", j == 0 ? "" : ",", header[j].c_str());
  std::fprintf(f, "\n");
  for (const auto& row : rows) {
    for (size_t j = 0; j < row.size(); ++j)
      std::fprintf(f, "%s%.17g", j == 0 ? "" : ",", row[j]);
    std::fprintf(f, "\n");
  }
  std::fclose(f);
}

int CsvTable::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ParseError("csv column not found: " + name);
  return static_cast<int>(it - header.begin());
}

CsvTable read_table_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open csv file: " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty csv file: " + path);
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) t.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    t.rows.push_back(std::move(row));
  }
  return t;
}

uint64_t fnv1a64(const void* data, size_t bytes, uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = seed;
  for (size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace flownet
