#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nextmon::events {

enum class EventKind { PredictedSwitchOff, PredictedSwitchOn, Peak };

std::string_view to_string(EventKind kind);
EventKind event_kind_from_string(std::string_view name);

struct EventMarker {
  std::size_t step = 0;
  EventKind kind = EventKind::Peak;
  std::size_t confidence_window = 0;
  /// Label of the horizon whose prediction produced the marker (may be empty).
  std::string horizon;

  bool operator==(const EventMarker&) const = default;
};

/// Centered moving average. Near the ends the window is truncated to the
/// available samples, so the output has the input's length. `window` must be odd, >= 1 and
/// no longer than the series.
std::vector<double> smooth(std::span<const double> series, std::size_t window);

/// Local maxima: s is marked iff the full window [s-w, s+w] lies inside the
/// series, series[s] is its earliest maximum, and series[s] - min >= prominence.
std::vector<EventMarker> detect_peaks(std::span<const double> series, std::size_t half_width, double prominence);

/// Same, with a per-step prominence threshold.
std::vector<EventMarker> detect_peaks(std::span<const double> series, std::size_t half_width,
                                      std::span<const double> prominence);

/// max - min over the trailing window [t-window+1, t] for every t.
std::vector<double> running_range(std::span<const double> series, std::size_t window);

struct EventParams {
  std::size_t smoothing_window = 15;
  std::size_t half_width = 20;
  /// Prominence as a fraction of the running range of the smoothed series.
  double prominence_fraction = 0.1;
  std::size_t range_window = 1440;
  /// Absolute prominence; overrides the fraction when set.
  std::optional<double> prominence;

  void validate() const;
};

/// Smooths a predicted temperature series and turns its peaks into predicted
/// switch-off markers and its troughs into predicted switch-on markers.
/// Markers are sorted by step.
std::vector<EventMarker> detect_switch_events(std::span<const double> prediction, const EventParams& params,
                                              const std::string& horizon = {});

/// Online counterpart of detect_switch_events. A marker for step s is emitted
/// once step s + half_width + smoothing_window/2 has been pushed. Away from the
/// final steps of a series it reports exactly the batch markers.
class StreamingEventDetector {
 public:
  explicit StreamingEventDetector(EventParams params, std::string horizon = {});

  std::vector<EventMarker> push(double value);
  std::size_t latency() const { return params_.half_width + params_.smoothing_window / 2; }
  void reset();

 private:
  void push_smoothed(double value, std::vector<EventMarker>& out);

  EventParams params_;
  std::string horizon_;
  std::size_t raw_count_ = 0;
  std::deque<double> raw_;       // last smoothing_window raw values
  std::size_t smoothed_count_ = 0;
  std::deque<double> smoothed_;  // enough smoothed values for range and peak windows
};

}  // namespace nextmon::events
