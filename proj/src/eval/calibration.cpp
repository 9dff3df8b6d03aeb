#include "imm/eval/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "imm/error.hpp"

namespace imm::eval {

std::vector<double> calibration_mesh(std::size_t levels) {
  if (levels == 0) throw DomainError("calibration mesh needs at least one level");
  std::vector<double> out(levels);
  for (std::size_t l = 1; l <= levels; ++l) {
    out[l - 1] = static_cast<double>(l) / static_cast<double>(levels + 1);
  }
  return out;
}

std::size_t CalibrationReport::horizons() const noexcept {
  return points.empty() ? 0 : points.back().horizon;
}

double CalibrationReport::max_error(std::size_t horizon) const {
  double worst = 0.0;
  bool seen = false;
  for (const auto& p : points) {
    if (p.horizon != horizon) continue;
    worst = std::max(worst, std::fabs(p.eta_hat - p.eta));
    seen = true;
  }
  if (!seen) throw DomainError("no calibration points for horizon " + std::to_string(horizon));
  return worst;
}

CalibrationReport calibration_from_pit(std::span<const std::vector<double>> pit,
                                       std::size_t levels) {
  if (pit.empty()) throw DomainError("calibration needs at least one sample");
  const std::size_t t = pit.front().size();
  for (const auto& row : pit) {
    if (row.size() != t) throw DimensionError("ragged CDF values");
  }
  const auto mesh = calibration_mesh(levels);
  const double n = static_cast<double>(pit.size());
  CalibrationReport report;
  for (std::size_t h = 0; h < t; ++h) {
    std::vector<double> column(pit.size());
    for (std::size_t i = 0; i < pit.size(); ++i) column[i] = pit[i][h];
    std::sort(column.begin(), column.end());
    for (double eta : mesh) {
      const auto below = std::lower_bound(column.begin(), column.end(), eta) - column.begin();
      report.points.push_back({h + 1, eta, static_cast<double>(below) / n});
    }
  }
  return report;
}

CalibrationReport calibration(dist::BaseKind kind, std::span<const dist::MixtureSample> samples,
                              std::span<const std::vector<double>> targets, std::size_t levels) {
  if (samples.size() != targets.size()) throw DimensionError("sample and target counts differ");
  std::vector<std::vector<double>> pit(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (targets[i].size() != samples[i].horizon()) throw DimensionError("target length mismatch");
    pit[i].resize(targets[i].size());
    for (std::size_t h = 0; h < targets[i].size(); ++h) {
      pit[i][h] = dist::mixture_cdf(kind, samples[i], h, targets[i][h]);
    }
  }
  return calibration_from_pit(pit, levels);
}

SharpnessReport sharpness_report(dist::BaseKind kind, std::span<const dist::MixtureSample> samples) {
  SharpnessReport out;
  if (samples.empty()) return out;
  out.variance.resize(samples.front().horizon());
  for (std::size_t h = 0; h < out.variance.size(); ++h) {
    out.variance[h] = dist::sharpness(kind, samples, h);
  }
  return out;
}

}  // namespace imm::eval
