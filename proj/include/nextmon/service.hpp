#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "nextmon/config.hpp"
#include "nextmon/events.hpp"
#include "nextmon/harness.hpp"

namespace nextmon::service {

inline constexpr int kWireSchemaVersion = 1;

enum class CommandKind { SetSetpoint, SetSpeed, Pause, Resume, SelectWeatherScenario };

struct ControlCommand {
  CommandKind kind = CommandKind::Pause;
  double value = 0.0;
  std::string scenario;
};

/// Playback speeds accepted by set-speed; 0 pauses.
inline constexpr double kAllowedSpeeds[] = {0.0, 1.0, 10.0, 60.0, 600.0};

/// Validates `{"kind": ..., "value": ...}` against the service settings.
/// Throws InputError with a message suitable for the operator.
ControlCommand parse_command(const nlohmann::json& body, const RunConfig& config);
nlohmann::json to_json(const ControlCommand& command);

struct TelemetryFrame {
  std::size_t step = 0;
  std::string wall_time;
  std::vector<std::string> channel_names;
  std::vector<double> channels;
  /// Present for the thermal plant.
  std::optional<thermal::HouseState> house;
  double hysteresis_band = 1.0;
  std::vector<Horizon> horizons;
  PredictionRecord record;
  std::vector<events::EventMarker> events;
  double speed = 1.0;
  bool paused = false;
  bool gap = false;
};

nlohmann::json to_json(const TelemetryFrame& frame);

/// Single-producer, multi-consumer fan-out with bounded per-subscriber
/// queues. Publishing never blocks; a full queue drops its oldest frame and
/// flags the next frame it delivers with `gap`.
class FrameBroadcaster {
 public:
  class Subscription {
   public:
    /// Waits up to `timeout` for the next frame. Returns nullopt on timeout
    /// or once the broadcaster is closed and drained.
    std::optional<TelemetryFrame> pop(std::chrono::milliseconds timeout);
    bool closed() const;
    std::size_t dropped() const;

   private:
    friend class FrameBroadcaster;
    explicit Subscription(std::size_t capacity) : capacity_(capacity) {}

    mutable std::mutex mutex_;
    std::condition_variable ready_;
    std::deque<std::shared_ptr<const TelemetryFrame>> queue_;
    std::size_t capacity_;
    std::size_t dropped_ = 0;
    bool gap_pending_ = false;
    bool closed_ = false;
  };

  explicit FrameBroadcaster(std::size_t capacity) : capacity_(capacity) {}

  std::shared_ptr<Subscription> subscribe();
  void unsubscribe(const std::shared_ptr<Subscription>& subscription);
  void publish(TelemetryFrame frame);
  void close();
  std::size_t subscribers() const;

 private:
  mutable std::mutex mutex_;
  std::size_t capacity_;
  std::vector<std::shared_ptr<Subscription>> subscribers_;
  bool closed_ = false;
};

/// The authoritative simulation + learner loop. Only `tick()` mutates plant
/// and learner state; `submit()` may be called from any thread.
class SimulationLoop {
 public:
  explicit SimulationLoop(const RunConfig& config);

  void submit(ControlCommand command);
  /// Applies queued commands in arrival order. Returns how many were applied.
  std::size_t apply_pending();
  /// Applies queued commands, then advances one step unless paused.
  /// Returns true when a step was taken.
  bool tick();

  double speed() const;
  bool paused() const;
  std::size_t step() const;
  std::optional<TelemetryFrame> latest() const;
  FrameBroadcaster& broadcaster() { return broadcaster_; }
  const Session& session() const { return session_; }

  /// Blocks until a command is queued, `stop` is set or `deadline` passes.
  void wait(std::chrono::steady_clock::time_point deadline, const std::atomic<bool>& stop);
  void notify();

 private:
  void apply(const ControlCommand& command);
  bool publish_due(std::size_t step) const;

  RunConfig config_;
  Session session_;
  std::vector<events::StreamingEventDetector> detectors_;
  std::vector<events::EventMarker> pending_events_;
  FrameBroadcaster broadcaster_;

  mutable std::mutex inbox_mutex_;
  std::condition_variable inbox_cv_;
  std::deque<ControlCommand> inbox_;

  mutable std::mutex state_mutex_;
  double speed_;
  bool paused_ = false;
  std::optional<TelemetryFrame> latest_;
};

struct ServiceOptions {
  /// Multiplies the wall-clock period of one step; 0 runs unpaced.
  double pacing_scale = 1.0;
};

/// HTTP front end: GET /stream, POST /command, GET /state, GET /healthz, GET /.
class Service {
 public:
  explicit Service(const RunConfig& config, ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and starts the HTTP and simulation threads. Port 0 picks a free
  /// port. Throws std::runtime_error when the address cannot be bound.
  void start(const std::string& host, int port);
  void stop();
  /// Blocks until stop() is called from another thread.
  void wait();
  int port() const { return port_; }
  SimulationLoop& loop() { return loop_; }

 private:
  struct Http;
  void run_simulation();

  RunConfig config_;
  ServiceOptions options_;
  SimulationLoop loop_;
  std::unique_ptr<Http> http_;
  std::thread http_thread_;
  std::thread sim_thread_;
  std::atomic<bool> stop_{false};
  int port_ = 0;
};

/// Parses `host:port` (port required).
std::pair<std::string, int> parse_bind(const std::string& bind);

}  // namespace nextmon::service
