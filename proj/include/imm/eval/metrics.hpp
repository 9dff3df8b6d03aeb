#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "imm/dist/distribution.hpp"

namespace imm::eval {

enum class EventClass { Full, Hypo, Hyper, Event };

std::string_view to_string(EventClass c) noexcept;
/// Throws ParameterError on an unknown name.
EventClass parse_event_class(std::string_view name);

/// Mixture mean per horizon.
std::vector<double> point_forecast(const dist::MixtureSample& sample);

/// Targets with |y| below this are treated as zero and excluded from APE.
inline constexpr double kApeZeroTolerance = 1e-6;

/// 100 * mean |y - y_hat| / |y|; nullopt when any target is (near) zero.
/// Throws DimensionError on a length mismatch or empty input.
std::optional<double> ape(std::span<const double> y, std::span<const double> y_hat);
double rmse(std::span<const double> y, std::span<const double> y_hat);

struct EventThresholds {
  double hypo = 70.0;
  double hyper = 180.0;
};

/// Always contains Full; Hypo/Hyper when a value crosses the threshold and
/// Event when either does. Ordered as the enum.
std::vector<EventClass> classify_event(std::span<const double> y_raw,
                                       const EventThresholds& thresholds = {});

/// A reporting window: `label` is what is printed (minutes for CGM, steps
/// otherwise) and `horizons` how many leading horizons it covers.
struct MetricWindow {
  std::size_t label = 0;
  std::size_t horizons = 0;
  friend bool operator==(const MetricWindow&, const MetricWindow&) = default;
};

/// {15, 30, 45, 60} minutes at 5-minute steps, limited to pred_len.
std::vector<MetricWindow> minute_windows(std::size_t pred_len, std::size_t minutes_per_step = 5);
/// One window per horizon count 1..pred_len, labelled in steps.
std::vector<MetricWindow> step_windows(std::size_t pred_len);

struct SampleMetrics {
  std::size_t window = 0;  // MetricWindow::label
  std::optional<double> ape;
  double rmse = 0.0;
  std::vector<EventClass> classes;
};

/// Per-window metrics of one forecast. Event classes are only attached when
/// `events` is set; otherwise each entry is Full only.
std::vector<SampleMetrics> score_forecast(std::span<const double> y_raw,
                                          std::span<const double> y_hat_raw,
                                          std::span<const MetricWindow> windows, bool events,
                                          const EventThresholds& thresholds = {});

struct MetricsRow {
  std::size_t window = 0;
  EventClass event = EventClass::Full;
  std::optional<double> ape;  // absent when every APE in the cell was excluded
  double rmse = 0.0;
  std::size_t n = 0;
  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

/// Rows sorted by (window, class); classes with no samples are absent.
struct MetricsReport {
  std::vector<MetricsRow> rows;
  std::size_t ape_excluded = 0;
  const MetricsRow* find(std::size_t window, EventClass event) const;
  friend bool operator==(const MetricsReport& a, const MetricsReport& b) { return a.rows == b.rows; }
};

/// Median of the values; even counts average the two central values.
/// Throws DomainError when empty.
double median(std::vector<double> values);

MetricsReport aggregate_metrics(std::span<const SampleMetrics> samples);

}  // namespace imm::eval
