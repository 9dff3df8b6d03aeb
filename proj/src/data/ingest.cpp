#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "imm/data/cgm.hpp"
#include "imm/error.hpp"

namespace imm::data {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    out.push_back(trim(line.substr(pos, comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

std::vector<RawSeries> parse_csv(std::istream& in, const std::string& source_name) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) -> DataError {
    return DataError(source_name + ":" + std::to_string(line_no) + ": " + what);
  };
  if (!std::getline(in, line)) {
    line_no = 1;
    throw fail("missing header");
  }
  ++line_no;
  const auto header = split_fields(line);
  auto column = [&](std::string_view name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw fail("missing column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_subject = column("subject_id");
  const std::size_t c_time = column("timestamp");
  const std::size_t c_glucose = column("glucose_mgdl");
  const std::size_t needed = std::max({c_subject, c_time, c_glucose}) + 1;

  std::map<std::string, std::vector<Reading>> by_subject;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() < needed) throw fail("expected " + std::to_string(header.size()) + " fields");
    const std::string subject(fields[c_subject]);
    if (subject.empty()) throw fail("empty subject_id");
    Reading r;
    if (!parse_number(fields[c_time], r.timestamp)) {
      throw fail("non-integer timestamp '" + std::string(fields[c_time]) + "'");
    }
    if (!parse_number(fields[c_glucose], r.glucose)) {
      throw fail("non-numeric glucose '" + std::string(fields[c_glucose]) + "'");
    }
    if (!(r.glucose > 0.0) || !std::isfinite(r.glucose)) {
      throw fail("glucose must be positive and finite");
    }
    by_subject[subject].push_back(r);
  }

  std::vector<RawSeries> out;
  out.reserve(by_subject.size());
  for (auto& [subject, readings] : by_subject) {
    std::stable_sort(readings.begin(), readings.end(),
                     [](const Reading& a, const Reading& b) { return a.timestamp < b.timestamp; });
    for (std::size_t i = 1; i < readings.size(); ++i) {
      if (readings[i].timestamp == readings[i - 1].timestamp) {
        throw DataError(source_name + ": duplicate timestamp " +
                        std::to_string(readings[i].timestamp) + " for subject '" + subject + "'");
      }
    }
    out.push_back({subject, std::move(readings)});
  }
  return out;
}

std::vector<RawSeries> ingest_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_csv(in, path.string());
}

}  // namespace imm::data
