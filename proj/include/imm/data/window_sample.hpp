#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace imm::data {

/// One training/evaluation instance cut from a contiguous series.
///
/// x and y are on the normalized scale; y_raw keeps the original units for
/// metric reporting. Time features are row-major with `time_features`
/// columns (zero for synthetic data).
struct WindowSample {
  std::vector<double> x;
  std::vector<double> time_feat;         // x.size() x time_features
  std::vector<double> future_time_feat;  // y.size() x time_features
  std::size_t time_features = 0;
  std::size_t subject = 0;
  std::vector<double> y;
  std::vector<double> y_raw;

  /// Provenance: source segment/series id and the index of x[0] within it.
  std::string source;
  std::size_t offset = 0;
};

}  // namespace imm::data
