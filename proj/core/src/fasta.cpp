#include "splicernn/fasta.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>

#include "splicernn/errors.hpp"
#include "splicernn/nucleotide.hpp"

namespace splicernn {

std::vector<GenomeSequence> parse_fasta(std::istream& in) {
  std::vector<GenomeSequence> records;
  std::string line;
  std::size_t line_no = 0;
  bool have_record = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    if (line[0] == '>') {
      std::size_t start = 1;
      while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start]))) ++start;
      std::size_t end = start;
      while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
      if (end == start)
        throw ValidationError("fasta: empty header at line " + std::to_string(line_no));
      records.push_back({line.substr(start, end - start), {}});
      have_record = true;
      continue;
    }

    bool blank = true;
    for (const char c : line) {
      if (std::isspace(static_cast<unsigned char>(c))) continue;
      blank = false;
      if (!have_record)
        throw ValidationError("fasta: sequence line before any header at line " +
                              std::to_string(line_no));
      records.back().bases.push_back(nucleotide_code(c));
    }
    (void)blank;
  }

  if (records.empty()) throw ValidationError("fasta: no records");
  return records;
}

std::vector<GenomeSequence> load_fasta(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open fasta file: " + path);
  try {
    return parse_fasta(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void write_fasta(std::ostream& out, std::span<const GenomeSequence> seqs,
                 std::size_t line_width) {
  if (line_width == 0) line_width = 70;
  for (const GenomeSequence& seq : seqs) {
    out << '>' << seq.id << '\n';
    for (std::size_t i = 0; i < seq.bases.size(); i += line_width) {
      const std::size_t n = std::min(line_width, seq.bases.size() - i);
      for (std::size_t j = 0; j < n; ++j) out << nucleotide_char(seq.bases[i + j]);
      out << '\n';
    }
  }
}

}  // namespace splicernn
