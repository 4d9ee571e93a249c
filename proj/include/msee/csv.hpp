#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace msee {

/// RFC-4180 writer. Numbers are printed with %.17g so files round-trip and
/// identical runs produce identical bytes.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void header(const std::vector<std::string>& names);
  void row(const std::vector<double>& values);
  void fields(const std::vector<std::string>& values);

  static std::string number(double v);
  static std::string quote(const std::string& field);

 private:
  std::ostream& os_;
};

}  // namespace msee
