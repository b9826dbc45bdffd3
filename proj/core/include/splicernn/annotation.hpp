#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace splicernn {

enum class Strand : char { plus = '+', minus = '-', unspecified = '.' };

struct ExonRecord {
  std::string sequence_id;
  std::int64_t start = 0;  // 0-based inclusive
  std::int64_t end = 0;    // 0-based exclusive
  Strand strand = Strand::unspecified;

  friend bool operator==(const ExonRecord&, const ExonRecord&) = default;
};

// Tab-separated lines: sequence_id, start, end, optional strand.
// '#' lines are comments. Records are validated (start < end) and
// deduplicated by (sequence_id, start, end, strand); the first occurrence
// wins and input order is preserved. total_records, when given, receives
// the pre-dedup count.
std::vector<ExonRecord> parse_exon_annotation(std::istream& in,
                                              std::size_t* total_records = nullptr);
std::vector<ExonRecord> load_exon_annotation(const std::string& path,
                                             std::size_t* total_records = nullptr);

}  // namespace splicernn
