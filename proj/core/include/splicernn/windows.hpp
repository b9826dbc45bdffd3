#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "splicernn/annotation.hpp"
#include "splicernn/fasta.hpp"
#include "splicernn/matrix.hpp"

namespace splicernn {

inline constexpr int kLabelAcceptor = 0;
inline constexpr int kLabelNonsite = 1;
inline constexpr int kLabelDonor = 2;
inline constexpr int kNumWindowLabels = 3;

// Fixed-length window of nucleotide codes (no N) with its class label.
// `group` identifies the source exon so dataset splits can keep all windows
// from one exon on the same side; it is in-memory only, never serialized.
struct LabeledWindow {
  std::vector<std::uint8_t> bases;
  int label = kLabelNonsite;
  std::string sequence_id;
  std::int64_t center = 0;
  std::uint64_t group = 0;
};

struct WindowExtraction {
  std::vector<LabeledWindow> windows;  // 0..3, in acceptor/non-site/donor order
  int dropped_out_of_range = 0;
  int dropped_ambiguous = 0;  // window contained N
};

// Cuts up to three windows around one exon:
//   acceptor centered on the first exonic base,
//   non-site centered on the middle of the exon,
//   donor centered on the first base past the exon,
// each spanning [center - w/2, center + w/2). Minus-strand windows are
// reverse-complemented after extraction. Windows that leave the sequence or
// contain N are dropped, never padded.
WindowExtraction extract_windows(const GenomeSequence& genome, const ExonRecord& exon,
                                 std::size_t window_length);

// w x 4 indicator matrix, one row per position
Matrix encode_onehot(const LabeledWindow& window);

struct DatasetSplit {
  std::vector<LabeledWindow> train;
  std::vector<LabeledWindow> test;
  std::uint64_t seed = 0;
};

// Deterministic grouped split: exon groups are sorted, shuffled under the
// seed, and the first floor(n_groups * (1 - test_ratio)) groups become
// training data. Windows keep their input order within each side.
DatasetSplit split_dataset(std::span<const LabeledWindow> windows, double test_ratio,
                           std::uint64_t seed);

// Dataset file format: one window per line,
//   label<TAB>bases<TAB>sequence_id:center
// UTF-8, LF line endings.
void write_windows(std::ostream& out, std::span<const LabeledWindow> windows);
std::vector<LabeledWindow> read_windows(std::istream& in);
void save_windows(const std::string& path, std::span<const LabeledWindow> windows);
std::vector<LabeledWindow> load_windows(const std::string& path);

}  // namespace splicernn
