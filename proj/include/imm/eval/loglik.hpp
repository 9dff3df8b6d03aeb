#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "imm/data/window_sample.hpp"
#include "imm/dist/distribution.hpp"
#include "imm/model/transformer.hpp"

namespace imm::eval {

/// Mean mixture log-density of normalized targets, one sample per target.
/// Throws DimensionError on mismatched counts, DomainError when empty.
double average_mixture_loglik(dist::BaseKind kind, std::span<const dist::MixtureSample> samples,
                              std::span<const std::vector<double>> targets);

/// Draws k passes per window (seeds derived from `seed` and the window
/// index) and averages the mixture log-density of y.
double test_loglik_imm(const model::Transformer& model,
                       std::span<const data::WindowSample> windows, std::size_t k,
                       std::uint64_t seed, bool stochastic = true);

struct BaselineLoglik {
  double avg_ll = 0.0;
  double variance = 0.0;
  std::string warning;  // set when the variance was floored
};

inline constexpr double kVarianceFloor = 1e-12;

/// Gaussian comparator for point forecasts: MLE variance of the residuals
/// (floored at kVarianceFloor) plugged into the average log-likelihood.
BaselineLoglik test_loglik_gaussian_baseline(std::span<const std::vector<double>> predictions,
                                             std::span<const std::vector<double>> targets);

}  // namespace imm::eval
