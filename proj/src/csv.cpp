#include "msee/csv.hpp"

#include <cmath>
#include <cstdio>

namespace msee {

std::string CsvWriter::number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string CsvWriter::quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void CsvWriter::header(const std::vector<std::string>& names) { fields(names); }

void CsvWriter::row(const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) os_ << (i ? "," : "") << number(values[i]);
  os_ << "\r\n";
}

void CsvWriter::fields(const std::vector<std::string>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) os_ << (i ? "," : "") << quote(values[i]);
  os_ << "\r\n";
}

}  // namespace msee
