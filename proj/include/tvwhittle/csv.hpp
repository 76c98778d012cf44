#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace tvwhittle {

// Doubles are written with 17 significant digits so files round-trip exactly.
std::string format_double(double value);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  CsvWriter& field(const std::string& value);
  CsvWriter& field(double value);
  CsvWriter& field(int value);
  void end_row();
  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
  std::size_t n_cols_;
  std::size_t col_ = 0;
  void sep();
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

// Parse failures report the 1-based line number.
CsvTable read_csv(const std::string& path);
double parse_double(const std::string& text, int line_number);

}  // namespace tvwhittle
