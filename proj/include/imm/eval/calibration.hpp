#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "imm/dist/distribution.hpp"

namespace imm::eval {

inline constexpr std::size_t kDefaultCalibrationLevels = 12;

/// Nominal levels l / (L + 1), l = 1..L. Throws DomainError for L = 0.
std::vector<double> calibration_mesh(std::size_t levels);

/// Horizons are 1-based here, as in the emitted files.
struct CalibrationPoint {
  std::size_t horizon = 0;
  double eta = 0.0;
  double eta_hat = 0.0;
  friend bool operator==(const CalibrationPoint&, const CalibrationPoint&) = default;
};

struct CalibrationReport {
  std::vector<CalibrationPoint> points;  // horizon-major, eta ascending
  std::size_t horizons() const noexcept;
  /// max_l |eta_hat - eta| at one horizon.
  double max_error(std::size_t horizon) const;
  friend bool operator==(const CalibrationReport&, const CalibrationReport&) = default;
};

/// Empirical frequencies of pit[i][h] < eta from predictive CDF values at
/// the realized targets (n rows of T values). Throws DomainError when
/// empty, DimensionError when ragged.
CalibrationReport calibration_from_pit(std::span<const std::vector<double>> pit,
                                       std::size_t levels = kDefaultCalibrationLevels);

/// Mixture CDF of each sample at its target, then calibration_from_pit.
CalibrationReport calibration(dist::BaseKind kind, std::span<const dist::MixtureSample> samples,
                              std::span<const std::vector<double>> targets,
                              std::size_t levels = kDefaultCalibrationLevels);

struct SharpnessReport {
  std::vector<double> variance;  // index h = horizon h + 1
  friend bool operator==(const SharpnessReport&, const SharpnessReport&) = default;
};

SharpnessReport sharpness_report(dist::BaseKind kind, std::span<const dist::MixtureSample> samples);

}  // namespace imm::eval
