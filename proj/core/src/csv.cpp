#include "ckt/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ckt/errors.hpp"

namespace ckt {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t\r");
    const auto e = f.find_last_not_of(" \t\r");
    f = b == std::string::npos ? std::string{} : f.substr(b, e - b + 1);
  }
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == name) return c;
  }
  throw DataError("missing column '" + name + "'");
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
    auto fields = split(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                      " fields, found " + std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  if (t.header.empty()) throw DataError("CSV input has no header");
  return t;
}

CsvTable read_csv_file(const std::string& path) {
  auto in = open_in(path);
  return read_csv(in);
}

double parse_double(const std::string& field, const std::string& what) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || field.empty()) throw DataError("cannot parse " + what + " '" + field + "'");
  return value;
}

std::string format_double(double x) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) throw DataError("cannot format number");
  return std::string(buf, ptr);
}

void write_dataset_csv(const Dataset& data, std::ostream& out) {
  out << "x1,x2";
  for (std::size_t c = 0; c < data.dim(); ++c) out << ",z" << c + 1;
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << format_double(data.x1(i)) << ',' << format_double(data.x2(i));
    for (double z : data.z(i)) out << ',' << format_double(z);
    out << '\n';
  }
}

void write_dataset_csv_file(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_dataset_csv(data, out);
}

Dataset read_dataset_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  const std::size_t cx1 = t.column("x1");
  const std::size_t cx2 = t.column("x2");
  std::vector<std::size_t> cz;
  for (std::size_t c = 1;; ++c) {
    const std::string name = "z" + std::to_string(c);
    if (std::find(t.header.begin(), t.header.end(), name) == t.header.end()) break;
    cz.push_back(t.column(name));
  }
  if (cz.empty()) throw DataError("dataset CSV needs at least the column z1");
  Dataset data(cz.size());
  data.reserve(t.rows.size());
  std::vector<double> z(cz.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string where = "value on data row " + std::to_string(r + 1);
    for (std::size_t c = 0; c < cz.size(); ++c) z[c] = parse_double(t.rows[r][cz[c]], where);
    data.add(parse_double(t.rows[r][cx1], where), parse_double(t.rows[r][cx2], where), z);
  }
  return data;
}

Dataset read_dataset_csv_file(const std::string& path) {
  auto in = open_in(path);
  return read_dataset_csv(in);
}

void write_pairs_csv(const PairDataset& pairs, std::ostream& out) {
  out << "i,j,w";
  for (std::size_t c = 0; c < pairs.dim(); ++c) out << ",ztilde" << c + 1;
  out << ",v\n";
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    out << pairs.first(k) + 1 << ',' << pairs.second(k) + 1 << ',' << pairs.w(k);
    for (double z : pairs.z_tilde(k)) out << ',' << format_double(z);
    out << ',' << format_double(pairs.v(k)) << '\n';
  }
}

}  // namespace ckt
