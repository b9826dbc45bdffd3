#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace splicernn {

struct GenomeSequence {
  std::string id;                    // first whitespace-delimited token of the header
  std::vector<std::uint8_t> bases;   // nucleotide codes

  std::size_t length() const { return bases.size(); }
};

// Parses FASTA text: '>' lines start a record, subsequent lines are sequence
// with whitespace stripped and symbols normalized to codes.
// Errors: empty input ("no records"), sequence data before any header.
std::vector<GenomeSequence> parse_fasta(std::istream& in);
std::vector<GenomeSequence> load_fasta(const std::string& path);

void write_fasta(std::ostream& out, std::span<const GenomeSequence> seqs,
                 std::size_t line_width = 70);

}  // namespace splicernn
