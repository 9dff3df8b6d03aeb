#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "imm/data/series.hpp"
#include "imm/data/window_sample.hpp"

// CGM ingestion and preprocessing: CSV parsing, segmentation at gaps and
// implausible jumps, segment-level 20:1:1 splitting and sliding windows.

namespace imm::data {

/// Reads `subject_id,timestamp,glucose_mgdl` rows. Output is grouped by
/// subject (sorted by id) with readings sorted by time. Throws DataError
/// with the offending line number for malformed rows, a missing column or
/// a duplicate (subject, timestamp).
std::vector<RawSeries> ingest_csv(const std::filesystem::path& path);
std::vector<RawSeries> parse_csv(std::istream& in, const std::string& source_name = "<stream>");

struct SegmentOptions {
  double max_jump = 40.0;       // mg/dL; a strictly larger change splits
  std::int64_t step = 300;      // seconds between consecutive readings
  std::size_t min_length = 1;   // shorter segments are dropped
};

/// Cuts a series at every timestamp gap != step and every jump > max_jump.
/// No interpolation is performed.
std::vector<Segment> segment(const RawSeries& series, const SegmentOptions& options);

struct Partition {
  std::vector<Segment> train, val, test;
  /// Non-empty when there were too few segments and everything went to train.
  std::string warning;
};

/// Seeded 20:1:1 split of whole segments: val and test each receive
/// floor(n / 22) segments, train the remainder. Input order does not
/// matter; segments are canonically sorted (subject, start) first.
Partition partition(std::vector<Segment> segments, std::uint64_t seed);

/// Day of year, day of month, day of week, hour and minute of a UTC
/// timestamp, each scaled affinely to [-0.5, 0.5].
std::array<double, 5> time_features(std::int64_t unix_seconds);
inline constexpr std::size_t kCgmTimeFeatures = 5;

/// Sliding windows (unit stride by default) over raw values; x, y and
/// y_raw all hold raw units until normalize_windows() is applied.
std::vector<WindowSample> windowize(const Segment& seg, std::size_t enc_len,
                                    std::size_t pred_len, std::size_t subject,
                                    std::size_t stride = 1);

/// Same for a plain series without timestamps (time_features = 0).
std::vector<WindowSample> windowize_values(const std::vector<double>& values,
                                           const std::string& source, std::size_t enc_len,
                                           std::size_t pred_len, std::size_t stride = 1);

}  // namespace imm::data
