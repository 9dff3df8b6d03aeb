#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "imm/data/synthetic.hpp"
#include "imm/model/config.hpp"
#include "imm/train/trainer.hpp"

namespace imm::cli {

/// Every setting of a run. Resolution order: defaults, then the key=value
/// config file, then IMM_* environment variables, then command-line flags.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";
  std::filesystem::path data = "data";
  std::string dataset = "synthetic";  // synthetic | cgm
  std::filesystem::path cgm_csv;
  std::filesystem::path checkpoint;
  std::filesystem::path compare;  // optional second checkpoint for eval
  std::string split = "test";     // windows used by predict/eval
  std::size_t stride = 1;
  std::size_t levels = 12;
  bool emit_draws = false;
  bool deterministic = false;  // predict: one dropout-free pass
  bool svg = true;

  model::ModelConfig model;
  train::TrainConfig train;
  data::SyntheticConfig synth;

  /// Throws ConfigError describing the first invalid field.
  void validate() const;
  /// Fully resolved key -> value table (sorted by key).
  std::map<std::string, std::string> to_map() const;
};

/// Recognized keys in canonical order.
const std::vector<std::string>& config_keys();

/// Applies key=value overrides; throws ConfigError on an unknown key or an
/// unparsable value.
void apply_overrides(RunConfig& config, const std::map<std::string, std::string>& kv);

/// Reads `key = value` lines; '#' starts a comment. Throws ConfigError.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

using EnvLookup = std::function<const char*(const char*)>;
/// IMM_<KEY> variables (key upper-cased) for every recognized key.
std::map<std::string, std::string> env_overrides(const EnvLookup& lookup);

/// Writes to_map() as sorted key=value lines.
void write_resolved_config(const std::filesystem::path& path, const RunConfig& config);

}  // namespace imm::cli
