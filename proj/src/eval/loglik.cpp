#include "imm/eval/loglik.hpp"

#include <string>

#include "imm/error.hpp"
#include "imm/random.hpp"

namespace imm::eval {

double average_mixture_loglik(dist::BaseKind kind, std::span<const dist::MixtureSample> samples,
                              std::span<const std::vector<double>> targets) {
  if (samples.size() != targets.size()) throw DimensionError("sample and target counts differ");
  if (samples.empty()) throw DomainError("no samples to score");
  double total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    total += dist::mixture_log_pdf(kind, samples[i], targets[i]);
  }
  return total / static_cast<double>(samples.size());
}

double test_loglik_imm(const model::Transformer& model,
                       std::span<const data::WindowSample> windows, std::size_t k,
                       std::uint64_t seed, bool stochastic) {
  if (windows.empty()) throw DomainError("no test windows");
  double total = 0.0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto sample = model.predict_distribution(windows[i], k, derive_seed(seed, i), stochastic);
    total += dist::mixture_log_pdf(model.config().base, sample, windows[i].y);
  }
  return total / static_cast<double>(windows.size());
}

BaselineLoglik test_loglik_gaussian_baseline(std::span<const std::vector<double>> predictions,
                                             std::span<const std::vector<double>> targets) {
  if (predictions.size() != targets.size()) {
    throw DimensionError("prediction and target counts differ");
  }
  if (targets.empty()) throw DomainError("no targets to score");
  std::vector<std::vector<double>> residuals(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (predictions[i].size() != targets[i].size() || targets[i].size() != targets[0].size()) {
      throw DimensionError("ragged predictions or targets");
    }
    residuals[i].resize(targets[i].size());
    for (std::size_t h = 0; h < targets[i].size(); ++h) {
      residuals[i][h] = targets[i][h] - predictions[i][h];
    }
  }
  BaselineLoglik out;
  out.variance = dist::gaussian_mle_variance(residuals);
  if (out.variance < kVarianceFloor) {
    out.warning = "residual variance " + std::to_string(out.variance) + " floored at 1e-12";
    out.variance = kVarianceFloor;
  }
  out.avg_ll = dist::gaussian_avg_loglik(out.variance, targets[0].size());
  return out;
}

}  // namespace imm::eval
