#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace imm::data {

/// Branching mixture-of-Gaussian-process generator settings.
struct SyntheticConfig {
  std::size_t n_train = 2000;
  std::size_t n_val = 100;
  std::size_t n_test = 100;
  double grid_start = -4.0;
  double grid_end = 3.0;
  double grid_step = 0.5;
  double branch_prob = 0.5;      // probability of the increasing branch
  double length_scale = 1.0;     // squared-exponential kernel
  double amplitude = 0.15;       // kernel standard deviation
  double obs_noise = 0.02;
  double branch_slope = 0.5;

  /// Throws ParameterError on invalid settings.
  void validate() const;
  std::vector<double> grid() const;
};

struct SyntheticSeries {
  std::size_t id = 0;
  int branch = 0;  // +1 increasing, -1 decreasing
  std::vector<double> time;
  std::vector<double> value;
};

struct SyntheticDataset {
  std::vector<SyntheticSeries> train, val, test;
};

/// Each series is a shared squared-exponential GP path over the whole grid.
/// From t = 0 on, a coin (branch_prob) picks the slope sign of a linear
/// ramp +/- branch_slope * t and an independent GP residual pinned to zero
/// at t = 0 is added. Observation noise is added everywhere. The marginal
/// over series is unimodal before 0 and bimodal after.
SyntheticDataset generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed);

/// `series_id,time,value` CSV. Throws DataError on IO failure.
void write_synthetic_csv(const std::filesystem::path& path,
                         const std::vector<SyntheticSeries>& series);
/// Reads the CSV written above; branch labels are not stored (branch = 0).
std::vector<SyntheticSeries> read_synthetic_csv(const std::filesystem::path& path);

}  // namespace imm::data
