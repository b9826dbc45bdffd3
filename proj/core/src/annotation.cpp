#include "splicernn/annotation.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <set>
#include <tuple>

#include "splicernn/errors.hpp"

namespace splicernn {

namespace {

std::int64_t parse_coordinate(const std::string& field, std::size_t line_no) {
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ValidationError("annotation: non-integer coordinate '" + field + "' at line " +
                          std::to_string(line_no));
  return value;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

}  // namespace

std::vector<ExonRecord> parse_exon_annotation(std::istream& in, std::size_t* total_records) {
  std::vector<ExonRecord> records;
  std::set<std::tuple<std::string, std::int64_t, std::int64_t, char>> seen;
  std::string line;
  std::size_t line_no = 0;
  std::size_t parsed = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;

    const std::vector<std::string> fields = split_tabs(line);
    if (fields.size() < 3 || fields.size() > 4)
      throw ValidationError("annotation: expected 3 or 4 tab-separated fields at line " +
                            std::to_string(line_no));
    ExonRecord rec;
    rec.sequence_id = fields[0];
    if (rec.sequence_id.empty())
      throw ValidationError("annotation: empty sequence id at line " + std::to_string(line_no));
    rec.start = parse_coordinate(fields[1], line_no);
    rec.end = parse_coordinate(fields[2], line_no);
    if (rec.start < 0)
      throw ValidationError("annotation: negative coordinate at line " + std::to_string(line_no));
    if (rec.start >= rec.end)
      throw ValidationError("annotation: empty exon at line " + std::to_string(line_no));
    if (fields.size() == 4 && !fields[3].empty()) {
      if (fields[3] == "+")
        rec.strand = Strand::plus;
      else if (fields[3] == "-")
        rec.strand = Strand::minus;
      else if (fields[3] == ".")
        rec.strand = Strand::unspecified;
      else
        throw ValidationError("annotation: bad strand '" + fields[3] + "' at line " +
                              std::to_string(line_no));
    }
    ++parsed;
    if (seen.insert({rec.sequence_id, rec.start, rec.end, static_cast<char>(rec.strand)}).second)
      records.push_back(std::move(rec));
  }

  if (total_records) *total_records = parsed;
  return records;
}

std::vector<ExonRecord> load_exon_annotation(const std::string& path, std::size_t* total_records) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open annotation file: " + path);
  try {
    return parse_exon_annotation(in, total_records);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

}  // namespace splicernn
