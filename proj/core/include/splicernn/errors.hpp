#pragma once

#include <stdexcept>

namespace splicernn {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exit-code mapping used by the command layer:
//   ValidationError -> 1, IoError -> 2, NumericError -> 3
struct ValidationError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct NumericError : Error {
  using Error::Error;
};

}  // namespace splicernn
