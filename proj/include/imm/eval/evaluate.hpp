#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "imm/data/normalize.hpp"
#include "imm/data/window_sample.hpp"
#include "imm/eval/calibration.hpp"
#include "imm/eval/loglik.hpp"
#include "imm/eval/metrics.hpp"
#include "imm/model/transformer.hpp"

namespace imm::eval {

/// How a model's forecasts become a predictive distribution.
enum class PredictiveMode {
  /// k stochastic passes form an equal-weight mixture.
  Mixture,
  /// One deterministic pass; a single Gaussian whose variance is the MLE of
  /// the test residuals (the comparator for MSE-trained models).
  PointGaussian,
};

struct EvalOptions {
  PredictiveMode mode = PredictiveMode::Mixture;
  std::size_t k = 100;
  std::uint64_t seed = 0;
  std::vector<MetricWindow> windows;  // empty: every horizon count
  bool events = false;
  EventThresholds thresholds;
  std::size_t levels = kDefaultCalibrationLevels;
  data::Normalizer normalizer;  // maps forecasts back to y_raw units
};

struct Evaluation {
  std::vector<dist::MixtureSample> samples;  // normalized scale
  std::vector<std::vector<double>> forecasts_raw;
  MetricsReport metrics;
  CalibrationReport calibration;
  SharpnessReport sharpness;
  /// Average test log-likelihood on the normalized scale; absent when there
  /// are no windows.
  std::optional<double> avg_ll;
  std::vector<std::string> warnings;
};

/// Full evaluation suite over test windows. An empty set yields empty
/// reports and a warning.
Evaluation evaluate(const model::Transformer& model, std::span<const data::WindowSample> windows,
                    const EvalOptions& options);

}  // namespace imm::eval
