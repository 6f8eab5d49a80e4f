#pragma once

#include "flownet/types.hpp"

#include <string>
#include <vector>

namespace flownet {

/// Dense matrix as comma-separated rows, full double precision.
void write_matrix_csv(const std::string& path, const MatX& m);
MatX read_matrix_csv(const std::string& path);

/// Generic CSV table with a header row.
void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;
};
CsvTable read_table_csv(const std::string& path);

uint64_t fnv1a64(const void* data, size_t bytes, uint64_t seed = 1469598103934665603ull);

}  // namespace flownet
