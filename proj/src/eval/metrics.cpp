#include "imm/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "imm/error.hpp"

namespace imm::eval {

std::string_view to_string(EventClass c) noexcept {
  switch (c) {
    case EventClass::Full: return "full";
    case EventClass::Hypo: return "hypo";
    case EventClass::Hyper: return "hyper";
    case EventClass::Event: return "event";
  }
  return "full";
}

EventClass parse_event_class(std::string_view name) {
  for (EventClass c : {EventClass::Full, EventClass::Hypo, EventClass::Hyper, EventClass::Event}) {
    if (to_string(c) == name) return c;
  }
  throw ParameterError("unknown event class '" + std::string(name) + "'");
}

std::vector<double> point_forecast(const dist::MixtureSample& sample) {
  std::vector<double> out(sample.horizon());
  for (std::size_t h = 0; h < out.size(); ++h) out[h] = dist::mixture_mean(sample, h);
  return out;
}

namespace {

void check_pair(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) throw DimensionError("target and forecast lengths differ");
  if (y.empty()) throw DimensionError("empty forecast");
}

}  // namespace

std::optional<double> ape(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat);
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (std::fabs(y[i]) < kApeZeroTolerance) return std::nullopt;
    total += std::fabs(y[i] - y_hat[i]) / std::fabs(y[i]);
  }
  return 100.0 * total / static_cast<double>(y.size());
}

double rmse(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat);
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
  return std::sqrt(total / static_cast<double>(y.size()));
}

std::vector<EventClass> classify_event(std::span<const double> y_raw,
                                       const EventThresholds& t) {
  std::vector<EventClass> out{EventClass::Full};
  if (y_raw.empty()) return out;
  const auto [lo, hi] = std::minmax_element(y_raw.begin(), y_raw.end());
  const bool hypo = *lo < t.hypo;
  const bool hyper = *hi > t.hyper;
  if (hypo) out.push_back(EventClass::Hypo);
  if (hyper) out.push_back(EventClass::Hyper);
  if (hypo || hyper) out.push_back(EventClass::Event);
  return out;
}

std::vector<MetricWindow> minute_windows(std::size_t pred_len, std::size_t minutes_per_step) {
  std::vector<MetricWindow> out;
  for (std::size_t minutes : {15, 30, 45, 60}) {
    const std::size_t h = minutes / minutes_per_step;
    if (h >= 1 && h <= pred_len && h * minutes_per_step == minutes) out.push_back({minutes, h});
  }
  return out;
}

std::vector<MetricWindow> step_windows(std::size_t pred_len) {
  std::vector<MetricWindow> out;
  for (std::size_t h = 1; h <= pred_len; ++h) out.push_back({h, h});
  return out;
}

std::vector<SampleMetrics> score_forecast(std::span<const double> y_raw,
                                          std::span<const double> y_hat_raw,
                                          std::span<const MetricWindow> windows, bool events,
                                          const EventThresholds& thresholds) {
  check_pair(y_raw, y_hat_raw);
  std::vector<SampleMetrics> out;
  for (const MetricWindow& w : windows) {
    if (w.horizons == 0 || w.horizons > y_raw.size()) {
      throw DimensionError("window of " + std::to_string(w.horizons) + " horizons exceeds forecast");
    }
    const auto y = y_raw.first(w.horizons);
    const auto f = y_hat_raw.first(w.horizons);
    SampleMetrics m;
    m.window = w.label;
    m.ape = ape(y, f);
    m.rmse = rmse(y, f);
    m.classes = events ? classify_event(y, thresholds) : std::vector<EventClass>{EventClass::Full};
    out.push_back(std::move(m));
  }
  return out;
}

const MetricsRow* MetricsReport::find(std::size_t window, EventClass event) const {
  for (const auto& r : rows) {
    if (r.window == window && r.event == event) return &r;
  }
  return nullptr;
}

double median(std::vector<double> values) {
  if (values.empty()) throw DomainError("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

MetricsReport aggregate_metrics(std::span<const SampleMetrics> samples) {
  struct Cell {
    std::vector<double> ape, rmse;
    std::size_t n = 0;
  };
  std::map<std::pair<std::size_t, int>, Cell> cells;
  MetricsReport report;
  for (const auto& s : samples) {
    if (!s.ape && std::find(s.classes.begin(), s.classes.end(), EventClass::Full) != s.classes.end()) {
      ++report.ape_excluded;
    }
    for (EventClass c : s.classes) {
      Cell& cell = cells[{s.window, static_cast<int>(c)}];
      ++cell.n;
      cell.rmse.push_back(s.rmse);
      if (s.ape) cell.ape.push_back(*s.ape);
    }
  }
  for (auto& [key, cell] : cells) {
    MetricsRow row;
    row.window = key.first;
    row.event = static_cast<EventClass>(key.second);
    row.n = cell.n;
    row.rmse = median(std::move(cell.rmse));
    if (!cell.ape.empty()) row.ape = median(std::move(cell.ape));
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace imm::eval
