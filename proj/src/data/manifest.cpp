#include "imm/data/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "imm/error.hpp"

namespace imm::data {

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  char buf[80];
  out << "imm-dataset 1\n";
  out << "kind " << m.kind << '\n';
  std::snprintf(buf, sizeof buf, "%.17g %.17g", m.normalizer.mean, m.normalizer.scale);
  out << "normalizer " << buf << '\n';
  for (const auto& [k, v] : m.settings) out << "setting " << k << ' ' << v << '\n';
  for (const auto& [k, v] : m.subjects) out << "subject " << k << ' ' << v << '\n';
  for (const auto& [k, v] : m.splits) out << "split " << k << ' ' << v << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset manifest " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "imm-dataset 1") {
    throw DataError(path.string() + ": not a dataset manifest");
  }
  DatasetManifest m;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string kind, key, value;
    row >> kind;
    bool ok = true;
    if (kind == "kind") {
      ok = static_cast<bool>(row >> m.kind);
    } else if (kind == "normalizer") {
      ok = static_cast<bool>(row >> m.normalizer.mean >> m.normalizer.scale);
    } else if (kind == "setting") {
      ok = static_cast<bool>(row >> key >> value);
      m.settings[key] = value;
    } else if (kind == "subject") {
      std::size_t index = 0;
      ok = static_cast<bool>(row >> key >> index);
      m.subjects[key] = index;
    } else if (kind == "split") {
      ok = static_cast<bool>(row >> key >> value);
      m.splits[key] = value;
    } else {
      ok = false;
    }
    if (!ok) throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed line");
  }
  return m;
}

}  // namespace imm::data
