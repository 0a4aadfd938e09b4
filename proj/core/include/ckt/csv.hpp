#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ckt/dataset.hpp"

namespace ckt {

/// Comma-separated table with a header row. Fields are not quoted.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position of `name`; throws DataError when absent.
  std::size_t column(const std::string& name) const;
};

/// Skips blank lines and lines starting with '#'. Throws DataError on ragged rows.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

/// Whole-field parse; throws DataError naming `what` on failure.
double parse_double(const std::string& field, const std::string& what);

/// Shortest representation that reads back to the same double (17 significant digits).
std::string format_double(double x);

/// Header x1,x2,z1,...,zp.
void write_dataset_csv(const Dataset& data, std::ostream& out);
void write_dataset_csv_file(const Dataset& data, const std::string& path);
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv_file(const std::string& path);

/// Header i,j,w,ztilde1,...,ztildep,v with 1-based observation indices.
void write_pairs_csv(const PairDataset& pairs, std::ostream& out);

}  // namespace ckt
