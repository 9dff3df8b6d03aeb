#pragma once

#include <span>
#include <string>
#include <vector>

#include "imm/data/window_sample.hpp"

namespace imm::data {

/// z-score transform fit on training values.
struct Normalizer {
  double mean = 0.0;
  double scale = 1.0;

  double apply(double v) const noexcept { return (v - mean) / scale; }
  double invert(double z) const noexcept { return z * scale + mean; }

  friend bool operator==(const Normalizer&, const Normalizer&) = default;
};

/// Mean and population standard deviation of the values. A zero spread
/// keeps scale = 1 (mean shift only) and fills *warning when given.
/// Throws DomainError on empty input.
Normalizer fit_normalizer(std::span<const double> values, std::string* warning = nullptr);

/// Maps x and y to the normalized scale; y_raw keeps raw units.
void normalize_windows(const Normalizer& norm, std::vector<WindowSample>& windows);

}  // namespace imm::data
