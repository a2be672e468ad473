#include "cfdev/csv.hpp"

#include <istream>
#include <ostream>

#include "cfdev/errors.hpp"

namespace cfdev {

namespace {

void write_field(std::ostream& out, const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) {
    out << field;
    return;
  }
  out << '"';
  for (const char c : field) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

void write_row(std::ostream& out, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    write_field(out, row[i]);
  }
  out << '\n';
}

std::vector<std::string> split_row(const std::string& line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) throw InvalidInput("unterminated quote on CSV line " + std::to_string(line_no));
  out.push_back(std::move(field));
  return out;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw InvalidInput("CSV has no column '" + name + "'");
}

void write_csv(std::ostream& out, const CsvTable& table) {
  for (const auto& c : table.comments) out << "# " << c << '\n';
  write_row(out, table.header);
  for (const auto& row : table.rows) write_row(out, row);
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      table.comments.push_back(line.size() > 2 && line[1] == ' ' ? line.substr(2) : line.substr(1));
      continue;
    }
    auto row = split_row(line, line_no);
    if (!have_header) {
      table.header = std::move(row);
      have_header = true;
      continue;
    }
    if (row.size() != table.header.size()) {
      throw InvalidInput("CSV line " + std::to_string(line_no) + " has " +
                         std::to_string(row.size()) + " fields, expected " +
                         std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw InvalidInput("CSV input has no header");
  return table;
}

}  // namespace cfdev
