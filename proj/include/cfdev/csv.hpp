#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cfdev {

/// A CSV table with leading '#' comment lines (tool version, resolved config).
struct CsvTable {
  std::vector<std::string> comments;  // without the leading "# "
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a named column; throws InvalidInput if absent.
  std::size_t column(const std::string& name) const;
};

void write_csv(std::ostream& out, const CsvTable& table);
CsvTable read_csv(std::istream& in);

}  // namespace cfdev
