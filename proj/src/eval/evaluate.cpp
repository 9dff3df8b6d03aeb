#include "imm/eval/evaluate.hpp"

#include <cmath>

#include "imm/random.hpp"

namespace imm::eval {

Evaluation evaluate(const model::Transformer& model, std::span<const data::WindowSample> windows,
                    const EvalOptions& o) {
  Evaluation ev;
  if (windows.empty()) {
    ev.warnings.push_back("empty test set: reports contain headers only");
    return ev;
  }
  for (const auto& w : windows) model.check_window(w);
  const auto kind = model.config().base;
  std::vector<std::vector<double>> targets;
  targets.reserve(windows.size());
  for (const auto& w : windows) targets.push_back(w.y);

  std::vector<std::vector<double>> forecasts;
  if (o.mode == PredictiveMode::Mixture) {
    ev.samples.reserve(windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) {
      ev.samples.push_back(model.predict_distribution(windows[i], o.k, derive_seed(o.seed, i)));
      forecasts.push_back(point_forecast(ev.samples.back()));
    }
    ev.avg_ll = average_mixture_loglik(kind, ev.samples, targets);
  } else {
    for (const auto& w : windows) forecasts.push_back(model.stochastic_forward(w, 0, false).mean);
    const auto baseline = test_loglik_gaussian_baseline(forecasts, targets);
    if (!baseline.warning.empty()) ev.warnings.push_back(baseline.warning);
    ev.avg_ll = baseline.avg_ll;
    const double log_var = std::log(baseline.variance);
    for (const auto& f : forecasts) {
      ev.samples.emplace_back(std::vector<dist::SufficientStats>{
          dist::SufficientStats(f, std::vector<double>(f.size(), log_var))});
    }
  }
  const auto sample_kind = o.mode == PredictiveMode::Mixture ? kind : dist::BaseKind::Gaussian;

  const std::size_t t = windows.front().y.size();
  const auto metric_windows = o.windows.empty() ? step_windows(t) : o.windows;
  std::vector<SampleMetrics> per_sample;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    std::vector<double> raw(forecasts[i].size());
    for (std::size_t h = 0; h < raw.size(); ++h) raw[h] = o.normalizer.invert(forecasts[i][h]);
    auto scored = score_forecast(windows[i].y_raw, raw, metric_windows, o.events, o.thresholds);
    per_sample.insert(per_sample.end(), scored.begin(), scored.end());
    ev.forecasts_raw.push_back(std::move(raw));
  }
  ev.metrics = aggregate_metrics(per_sample);
  if (ev.metrics.ape_excluded > 0) {
    ev.warnings.push_back(std::to_string(ev.metrics.ape_excluded) +
                          " window scores excluded from APE (zero target)");
  }
  ev.calibration = calibration(sample_kind, ev.samples, targets, o.levels);
  ev.sharpness = sharpness_report(sample_kind, ev.samples);
  return ev;
}

}  // namespace imm::eval
