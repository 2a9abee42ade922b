#include "nextmon/events.hpp"

#include <algorithm>
#include <cmath>

#include "nextmon/errors.hpp"

namespace nextmon::events {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::PredictedSwitchOff:
      return "predicted_switch_off";
    case EventKind::PredictedSwitchOn:
      return "predicted_switch_on";
    case EventKind::Peak:
      return "peak";
  }
  return "peak";
}

EventKind event_kind_from_string(std::string_view name) {
  if (name == "predicted_switch_off") return EventKind::PredictedSwitchOff;
  if (name == "predicted_switch_on") return EventKind::PredictedSwitchOn;
  if (name == "peak") return EventKind::Peak;
  throw InputError("unknown event kind '" + std::string(name) + "'");
}

std::vector<double> smooth(std::span<const double> series, std::size_t window) {
  if (window == 0 || window % 2 == 0) throw DomainError("smooth: window must be odd and >= 1");
  if (window > series.size()) throw DomainError("smooth: window longer than series");
  const std::size_t half = window / 2;
  const std::size_t n = series.size();
  std::vector<double> out(n);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t lo = s >= half ? s - half : 0;
    const std::size_t hi = std::min(n - 1, s + half);
    double sum = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) sum += series[i];
    out[s] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

namespace {

// Shared by the batch and streaming detectors so both apply identical rules.
bool is_peak(std::span<const double> window, std::size_t center, double prominence) {
  const double v = window[center];
  double lowest = v;
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (i < center && window[i] >= v) return false;  // earlier tie or higher value
    if (i > center && window[i] > v) return false;
    lowest = std::min(lowest, window[i]);
  }
  return v - lowest >= prominence;
}

}  // namespace

std::vector<EventMarker> detect_peaks(std::span<const double> series, std::size_t half_width,
                                      std::span<const double> prominence) {
  if (half_width < 1) throw DomainError("detect_peaks: half width must be >= 1");
  if (prominence.size() != series.size()) throw DomainError("detect_peaks: prominence length mismatch");
  std::vector<EventMarker> out;
  const std::size_t n = series.size();
  if (n < 2 * half_width + 1) return out;
  for (std::size_t s = half_width; s + half_width < n; ++s) {
    if (is_peak(series.subspan(s - half_width, 2 * half_width + 1), half_width, prominence[s]))
      out.push_back(EventMarker{s, EventKind::Peak, half_width, {}});
  }
  return out;
}

std::vector<EventMarker> detect_peaks(std::span<const double> series, std::size_t half_width, double prominence) {
  if (!(prominence >= 0.0)) throw DomainError("detect_peaks: prominence must be >= 0");
  std::vector<double> flat(series.size(), prominence);
  return detect_peaks(series, half_width, flat);
}

std::vector<double> running_range(std::span<const double> series, std::size_t window) {
  if (window == 0) throw DomainError("running_range: window must be >= 1");
  std::vector<double> out(series.size());
  std::deque<std::size_t> hi, lo;  // monotonic index queues
  for (std::size_t t = 0; t < series.size(); ++t) {
    while (!hi.empty() && series[hi.back()] <= series[t]) hi.pop_back();
    while (!lo.empty() && series[lo.back()] >= series[t]) lo.pop_back();
    hi.push_back(t);
    lo.push_back(t);
    const std::size_t first = t + 1 >= window ? t + 1 - window : 0;
    while (hi.front() < first) hi.pop_front();
    while (lo.front() < first) lo.pop_front();
    out[t] = series[hi.front()] - series[lo.front()];
  }
  return out;
}

void EventParams::validate() const {
  if (smoothing_window == 0 || smoothing_window % 2 == 0) throw ConfigError("smoothing window must be odd and >= 1");
  if (half_width < 1) throw ConfigError("peak half width must be >= 1");
  if (!(prominence_fraction >= 0.0)) throw ConfigError("prominence fraction must be >= 0");
  if (range_window < 1) throw ConfigError("range window must be >= 1");
  if (prominence && !(*prominence >= 0.0)) throw ConfigError("prominence must be >= 0");
}

namespace {

double threshold(const EventParams& params, double range) {
  return params.prominence ? *params.prominence : params.prominence_fraction * range;
}

}  // namespace

std::vector<EventMarker> detect_switch_events(std::span<const double> prediction, const EventParams& params,
                                              const std::string& horizon) {
  params.validate();
  std::vector<EventMarker> out;
  if (prediction.size() < params.smoothing_window) return out;
  auto smoothed = smooth(prediction, params.smoothing_window);
  auto range = running_range(smoothed, params.range_window);
  std::vector<double> prominence(range.size());
  for (std::size_t t = 0; t < range.size(); ++t) prominence[t] = threshold(params, range[t]);

  std::vector<double> negated(smoothed.size());
  std::transform(smoothed.begin(), smoothed.end(), negated.begin(), [](double v) { return -v; });

  for (auto m : detect_peaks(smoothed, params.half_width, prominence)) {
    m.kind = EventKind::PredictedSwitchOff;
    m.horizon = horizon;
    out.push_back(m);
  }
  for (auto m : detect_peaks(negated, params.half_width, prominence)) {
    m.kind = EventKind::PredictedSwitchOn;
    m.horizon = horizon;
    out.push_back(m);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.step < b.step; });
  return out;
}

StreamingEventDetector::StreamingEventDetector(EventParams params, std::string horizon)
    : params_(params), horizon_(std::move(horizon)) {
  params_.validate();
}

void StreamingEventDetector::reset() {
  raw_count_ = 0;
  raw_.clear();
  smoothed_count_ = 0;
  smoothed_.clear();
}

std::vector<EventMarker> StreamingEventDetector::push(double value) {
  std::vector<EventMarker> out;
  const std::size_t half = params_.smoothing_window / 2;
  raw_.push_back(value);
  if (raw_.size() > params_.smoothing_window) raw_.pop_front();
  ++raw_count_;
  // Raw index raw_count_-1 completes the window of smoothed index raw_count_-1-half.
  if (raw_count_ > half) {
    const std::size_t s = raw_count_ - 1 - half;
    const std::size_t lo = s >= half ? s - half : 0;
    const std::size_t first_buffered = raw_count_ - raw_.size();
    double sum = 0.0;
    for (std::size_t i = lo; i < raw_count_; ++i) sum += raw_[i - first_buffered];
    push_smoothed(sum / static_cast<double>(raw_count_ - lo), out);
  }
  return out;
}

void StreamingEventDetector::push_smoothed(double value, std::vector<EventMarker>& out) {
  const std::size_t w = params_.half_width;
  const std::size_t keep = std::max(params_.range_window, w + 1) + w;
  smoothed_.push_back(value);
  if (smoothed_.size() > keep) smoothed_.pop_front();
  ++smoothed_count_;
  if (smoothed_count_ < 2 * w + 1) return;

  const std::size_t s = smoothed_count_ - 1 - w;
  const std::size_t first_buffered = smoothed_count_ - smoothed_.size();
  auto at = [&](std::size_t idx) { return smoothed_[idx - first_buffered]; };

  const std::size_t range_first = s + 1 >= params_.range_window ? s + 1 - params_.range_window : 0;
  double hi = at(s), lo = at(s);
  for (std::size_t i = range_first; i <= s; ++i) {
    hi = std::max(hi, at(i));
    lo = std::min(lo, at(i));
  }
  const double delta = threshold(params_, hi - lo);

  std::vector<double> window(2 * w + 1), negated(2 * w + 1);
  for (std::size_t i = 0; i < window.size(); ++i) {
    window[i] = at(s - w + i);
    negated[i] = -window[i];
  }
  if (is_peak(window, w, delta)) out.push_back(EventMarker{s, EventKind::PredictedSwitchOff, w, horizon_});
  if (is_peak(negated, w, delta)) out.push_back(EventMarker{s, EventKind::PredictedSwitchOn, w, horizon_});
}

}  // namespace nextmon::events
