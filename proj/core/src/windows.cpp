#include "splicernn/windows.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "splicernn/errors.hpp"
#include "splicernn/nucleotide.hpp"
#include "splicernn/rng.hpp"

namespace splicernn {

namespace {

struct Center {
  std::int64_t pos;
  int label;
};

}  // namespace

WindowExtraction extract_windows(const GenomeSequence& genome, const ExonRecord& exon,
                                 std::size_t window_length) {
  if (window_length < 2 || window_length % 2 != 0)
    throw ValidationError("window length must be even and >= 2, got " +
                          std::to_string(window_length));
  const auto len = static_cast<std::int64_t>(genome.length());
  if (exon.start < 0 || exon.start >= exon.end || exon.end > len)
    throw ValidationError("exon [" + std::to_string(exon.start) + ", " +
                          std::to_string(exon.end) + ") not covered by sequence '" + genome.id +
                          "' of length " + std::to_string(len));

  const auto half = static_cast<std::int64_t>(window_length / 2);
  const Center centers[3] = {
      {exon.start, kLabelAcceptor},
      {exon.start + (exon.end - exon.start) / 2, kLabelNonsite},
      {exon.end, kLabelDonor},
  };

  WindowExtraction result;
  for (const Center& c : centers) {
    const std::int64_t lo = c.pos - half;
    const std::int64_t hi = c.pos + half;
    if (lo < 0 || hi > len) {
      ++result.dropped_out_of_range;
      continue;
    }
    LabeledWindow win;
    win.bases.assign(genome.bases.begin() + lo, genome.bases.begin() + hi);
    if (std::find(win.bases.begin(), win.bases.end(), kCodeN) != win.bases.end()) {
      ++result.dropped_ambiguous;
      continue;
    }
    if (exon.strand == Strand::minus) reverse_complement(win.bases);
    win.label = c.label;
    win.sequence_id = genome.id;
    win.center = c.pos;
    result.windows.push_back(std::move(win));
  }
  return result;
}

Matrix encode_onehot(const LabeledWindow& window) {
  Matrix out(window.bases.size(), kAlphabetSize);
  for (std::size_t t = 0; t < window.bases.size(); ++t) {
    const std::uint8_t code = window.bases[t];
    if (code >= kAlphabetSize)
      throw ValidationError("encode_onehot: window contains N at position " + std::to_string(t));
    out(t, code) = 1.0;
  }
  return out;
}

DatasetSplit split_dataset(std::span<const LabeledWindow> windows, double test_ratio,
                           std::uint64_t seed) {
  if (!(test_ratio > 0.0 && test_ratio < 1.0))
    throw ValidationError("test_ratio must lie in (0, 1), got " + std::to_string(test_ratio));

  // canonical group order first, so the shuffle is independent of how the
  // windows happened to be produced
  std::vector<std::uint64_t> groups;
  {
    std::unordered_set<std::uint64_t> seen;
    for (const LabeledWindow& w : windows)
      if (seen.insert(w.group).second) groups.push_back(w.group);
  }
  if (groups.size() < 2)
    throw ValidationError("split_dataset needs at least 2 exon groups, got " +
                          std::to_string(groups.size()));
  std::sort(groups.begin(), groups.end());

  Rng rng(seed);
  rng.shuffle(groups.begin(), groups.end());
  const auto n_train = static_cast<std::size_t>(
      static_cast<double>(groups.size()) * (1.0 - test_ratio));

  std::unordered_set<std::uint64_t> train_groups(groups.begin(), groups.begin() + n_train);

  DatasetSplit split;
  split.seed = seed;
  for (const LabeledWindow& w : windows) {
    if (train_groups.count(w.group))
      split.train.push_back(w);
    else
      split.test.push_back(w);
  }
  return split;
}

void write_windows(std::ostream& out, std::span<const LabeledWindow> windows) {
  for (const LabeledWindow& w : windows) {
    out << w.label << '\t';
    for (const std::uint8_t code : w.bases) out << nucleotide_char(code);
    out << '\t' << w.sequence_id << ':' << w.center << '\n';
  }
}

std::vector<LabeledWindow> read_windows(std::istream& in) {
  std::vector<LabeledWindow> windows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    const std::size_t tab1 = line.find('\t');
    const std::size_t tab2 = tab1 == std::string::npos ? std::string::npos
                                                       : line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos)
      throw ValidationError("dataset: expected 3 tab-separated fields at line " +
                            std::to_string(line_no));

    LabeledWindow w;
    {
      const std::string field = line.substr(0, tab1);
      int label = -1;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), label);
      if (ec != std::errc() || ptr != field.data() + field.size() || label < 0 ||
          label >= kNumWindowLabels)
        throw ValidationError("dataset: bad label '" + field + "' at line " +
                              std::to_string(line_no));
      w.label = label;
    }
    for (std::size_t i = tab1 + 1; i < tab2; ++i) {
      const std::uint8_t code = nucleotide_code(line[i]);
      if (code >= kAlphabetSize)
        throw ValidationError("dataset: bad base '" + std::string(1, line[i]) + "' at line " +
                              std::to_string(line_no));
      w.bases.push_back(code);
    }
    if (w.bases.empty())
      throw ValidationError("dataset: empty window at line " + std::to_string(line_no));
    {
      const std::string prov = line.substr(tab2 + 1);
      const std::size_t colon = prov.rfind(':');
      if (colon == std::string::npos || colon == 0)
        throw ValidationError("dataset: bad provenance '" + prov + "' at line " +
                              std::to_string(line_no));
      w.sequence_id = prov.substr(0, colon);
      const std::string center = prov.substr(colon + 1);
      const auto [ptr, ec] =
          std::from_chars(center.data(), center.data() + center.size(), w.center);
      if (ec != std::errc() || ptr != center.data() + center.size())
        throw ValidationError("dataset: bad center '" + center + "' at line " +
                              std::to_string(line_no));
    }
    w.group = windows.size();
    windows.push_back(std::move(w));
  }
  return windows;
}

void save_windows(const std::string& path, std::span<const LabeledWindow> windows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset file: " + path);
  write_windows(out, windows);
  out.flush();
  if (!out) throw IoError("failed while writing dataset file: " + path);
}

std::vector<LabeledWindow> load_windows(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file: " + path);
  try {
    return read_windows(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

}  // namespace splicernn
