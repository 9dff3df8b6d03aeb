#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "imm/data/normalize.hpp"

namespace imm::data {

/// Everything needed to rebuild a dataset exactly: split assignment of
/// every segment/series, the normalization affine and the subject table.
struct DatasetManifest {
  std::string kind;  // "synthetic" or "cgm"
  Normalizer normalizer;
  std::map<std::string, std::string> splits;         // source id -> train/val/test
  std::map<std::string, std::size_t> subjects;       // subject id -> embedding row
  std::map<std::string, std::string> settings;       // free key/value pairs

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace imm::data
