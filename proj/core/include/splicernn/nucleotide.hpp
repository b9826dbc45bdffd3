#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

namespace splicernn {

// Stable integer codes: A=0 C=1 G=2 T=3, everything else N=4. Parsing is
// case-insensitive. N never reaches the model; windows containing it are
// dropped during extraction.
inline constexpr std::uint8_t kCodeA = 0;
inline constexpr std::uint8_t kCodeC = 1;
inline constexpr std::uint8_t kCodeG = 2;
inline constexpr std::uint8_t kCodeT = 3;
inline constexpr std::uint8_t kCodeN = 4;
inline constexpr std::size_t kAlphabetSize = 4;

constexpr std::uint8_t nucleotide_code(char c) {
  switch (c) {
    case 'A': case 'a': return kCodeA;
    case 'C': case 'c': return kCodeC;
    case 'G': case 'g': return kCodeG;
    case 'T': case 't': return kCodeT;
    default: return kCodeN;
  }
}

constexpr char nucleotide_char(std::uint8_t code) {
  constexpr char table[5] = {'A', 'C', 'G', 'T', 'N'};
  return code < 5 ? table[code] : 'N';
}

// A<->T, C<->G; N stays N
constexpr std::uint8_t complement_code(std::uint8_t code) {
  return code <= kCodeT ? static_cast<std::uint8_t>(kCodeT - code) : kCodeN;
}

inline void reverse_complement(std::span<std::uint8_t> bases) {
  std::reverse(bases.begin(), bases.end());
  for (std::uint8_t& b : bases) b = complement_code(b);
}

}  // namespace splicernn
