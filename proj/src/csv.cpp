#include "tvwhittle/csv.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace tvwhittle {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path), n_cols_(header.size()) {
  if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i > 0) out_ << ',';
    out_ << header[i];
  }
  out_ << '\n';
}

void CsvWriter::sep() {
  if (col_ > 0) out_ << ',';
}

CsvWriter& CsvWriter::field(const std::string& value) {
  sep();
  out_ << value;
  ++col_;
  return *this;
}

CsvWriter& CsvWriter::field(double value) { return field(format_double(value)); }

CsvWriter& CsvWriter::field(int value) { return field(std::to_string(value)); }

void CsvWriter::end_row() {
  if (col_ != n_cols_)
    throw std::logic_error("csv row has " + std::to_string(col_) + " fields, expected " +
                           std::to_string(n_cols_));
  out_ << '\n';
  col_ = 0;
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvTable table;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.emplace_back();
    if (line_number == 1) {
      table.header = std::move(fields);
    } else {
      if (fields.size() != table.header.size())
        throw std::runtime_error(path + ":" + std::to_string(line_number) + ": expected " +
                                 std::to_string(table.header.size()) + " fields, got " +
                                 std::to_string(fields.size()));
      table.rows.push_back(std::move(fields));
    }
  }
  if (table.header.empty()) throw std::runtime_error(path + ": empty file");
  return table;
}

double parse_double(const std::string& text, int line_number) {
  try {
    std::size_t pos = 0;
    const double value = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw std::runtime_error("line " + std::to_string(line_number) + ": cannot parse '" + text +
                             "' as a number");
  }
}

}  // namespace tvwhittle
