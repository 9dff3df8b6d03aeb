#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "imm/eval/calibration.hpp"
#include "imm/eval/metrics.hpp"

namespace imm::eval {

struct LoglikRow {
  std::string model;
  double avg_ll = 0.0;
  friend bool operator==(const LoglikRow&, const LoglikRow&) = default;
};

struct ReportBundle {
  MetricsReport metrics;
  CalibrationReport calibration;
  SharpnessReport sharpness;
  std::vector<LoglikRow> loglik;
  friend bool operator==(const ReportBundle&, const ReportBundle&) = default;
};

/// Writes metrics.csv, calibration.csv, sharpness.csv and loglik.csv into
/// `dir` (created if missing), plus calibration.svg when `svg` is set.
/// Throws DataError when a file cannot be written.
void emit_reports(const ReportBundle& reports, const std::filesystem::path& dir, bool svg = false);

/// Parses the four CSVs written by emit_reports.
ReportBundle read_reports(const std::filesystem::path& dir);

/// Reliability diagram: one polyline per horizon and the diagonal.
std::string calibration_svg(const CalibrationReport& report);

}  // namespace imm::eval
