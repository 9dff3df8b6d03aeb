#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace imm::data {

struct Reading {
  std::int64_t timestamp = 0;  // Unix seconds
  double glucose = 0.0;        // mg/dL

  friend bool operator==(const Reading&, const Reading&) = default;
};

/// All readings of one subject, sorted by strictly increasing timestamp.
struct RawSeries {
  std::string subject_id;
  std::vector<Reading> readings;
};

/// Gap-free stretch of readings at the nominal step with no oversized jump.
struct Segment {
  std::string subject_id;
  std::int64_t start = 0;
  std::int64_t step = 300;
  std::vector<double> values;

  std::int64_t timestamp(std::size_t i) const noexcept {
    return start + static_cast<std::int64_t>(i) * step;
  }
  /// Stable identifier "<subject>@<start>".
  std::string id() const { return subject_id + "@" + std::to_string(start); }
};

}  // namespace imm::data
