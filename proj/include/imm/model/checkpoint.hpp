#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "imm/model/config.hpp"
#include "imm/model/params.hpp"

namespace imm::model {

/// Checkpoint file layout:
///
///   imm-checkpoint 1
///   meta <key> <value>                         (model config + free metadata)
///   tensor <name> <rank> <dim>... <byte offset>
///   data <byte count>
///   <raw little-endian float64 payload>
///
/// Offsets are relative to the first payload byte. Values round-trip bit
/// exactly.
struct Checkpoint {
  ModelConfig config;
  ParameterStore params;
  std::map<std::string, std::string> meta;
};

/// Throws DataError on IO failure.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);

/// Throws DataError on IO failure or a malformed file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace imm::model
