#pragma once

#include <optional>
#include <string>

#include "splicernn/errors.hpp"
#include "splicernn/model.hpp"
#include "splicernn/optim.hpp"

namespace splicernn {

enum class CheckpointErrorKind { format, version, checksum, truncated };

class CheckpointError : public ValidationError {
 public:
  CheckpointError(CheckpointErrorKind kind, const std::string& msg)
      : ValidationError(msg), kind_(kind) {}
  CheckpointErrorKind kind() const { return kind_; }

 private:
  CheckpointErrorKind kind_;
};

// Binary container: magic, format version, length-prefixed sections (config
// text, named tensors as little-endian 64-bit floats, optimizer state) and a
// trailing checksum over everything before it.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  SpliceModel model;
  std::optional<Optimizer> optimizer;
};

std::string encode_checkpoint(SpliceModel& model, const Optimizer* optimizer);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(SpliceModel& model, const Optimizer* optimizer, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace splicernn
