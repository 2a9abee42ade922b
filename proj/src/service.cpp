#include "nextmon/service.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>

#include <httplib.h>

#include "nextmon/errors.hpp"

namespace nextmon::service {

using nlohmann::json;

namespace {

std::string_view kind_name(CommandKind kind) {
  switch (kind) {
    case CommandKind::SetSetpoint:
      return "set-setpoint";
    case CommandKind::SetSpeed:
      return "set-speed";
    case CommandKind::Pause:
      return "pause";
    case CommandKind::Resume:
      return "resume";
    case CommandKind::SelectWeatherScenario:
      return "select-weather-scenario";
  }
  return "pause";
}

std::string utc_now() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count();
  auto text = thermal::format_iso8601(ms / 1000);
  char frac[8];
  std::snprintf(frac, sizeof frac, ".%03lld", static_cast<long long>(ms % 1000));
  text.insert(text.size() - 1, frac);
  return text;
}

}  // namespace

ControlCommand parse_command(const json& body, const RunConfig& config) {
  if (!body.is_object()) throw InputError("command must be a JSON object");
  auto kind_it = body.find("kind");
  if (kind_it == body.end() || !kind_it->is_string()) throw InputError("command needs a string 'kind'");
  const auto kind = kind_it->get<std::string>();
  auto number = [&]() {
    auto v = body.find("value");
    if (v == body.end() || !v->is_number()) throw InputError("'" + kind + "' needs a numeric 'value'");
    const double d = v->get<double>();
    if (!std::isfinite(d)) throw InputError("'" + kind + "' value must be finite");
    return d;
  };

  ControlCommand cmd;
  if (kind == "set-setpoint") {
    if (config.plant != "thermal") throw InputError("set-setpoint needs the thermal plant");
    cmd.kind = CommandKind::SetSetpoint;
    cmd.value = number();
    if (cmd.value < config.service.setpoint_min || cmd.value > config.service.setpoint_max)
      throw InputError("setpoint outside safe range [" + format_value(config.service.setpoint_min) + ", " +
                       format_value(config.service.setpoint_max) + "]");
  } else if (kind == "set-speed") {
    cmd.kind = CommandKind::SetSpeed;
    cmd.value = number();
    if (std::find(std::begin(kAllowedSpeeds), std::end(kAllowedSpeeds), cmd.value) == std::end(kAllowedSpeeds))
      throw InputError("speed must be one of 0, 1, 10, 60, 600");
  } else if (kind == "pause") {
    cmd.kind = CommandKind::Pause;
  } else if (kind == "resume") {
    cmd.kind = CommandKind::Resume;
  } else if (kind == "select-weather-scenario") {
    cmd.kind = CommandKind::SelectWeatherScenario;
    auto v = body.find("value");
    if (v == body.end() || !v->is_string()) throw InputError("select-weather-scenario needs a string 'value'");
    cmd.scenario = v->get<std::string>();
    if (cmd.scenario != "default" && !config.scenarios.count(cmd.scenario))
      throw InputError("unknown weather scenario '" + cmd.scenario + "'");
  } else {
    throw InputError("unknown command kind '" + kind + "'");
  }
  return cmd;
}

json to_json(const ControlCommand& command) {
  json j = {{"kind", kind_name(command.kind)}};
  if (command.kind == CommandKind::SetSetpoint || command.kind == CommandKind::SetSpeed) j["value"] = command.value;
  if (command.kind == CommandKind::SelectWeatherScenario) j["value"] = command.scenario;
  return j;
}

json to_json(const TelemetryFrame& f) {
  json channels = json::object();
  for (std::size_t i = 0; i < f.channel_names.size(); ++i) channels[f.channel_names[i]] = f.channels[i];
  json horizons = json::array();
  for (std::size_t i = 0; i < f.horizons.size(); ++i) {
    horizons.push_back({{"label", f.horizons[i].label},
                        {"gamma", f.horizons[i].gamma},
                        {"raw", f.record.predictions[i]},
                        {"normalized", f.record.normalized[i]},
                        {"td_error", f.record.td_errors[i]}});
  }
  json events = json::array();
  for (const auto& e : f.events)
    events.push_back({{"step", e.step},
                      {"kind", events::to_string(e.kind)},
                      {"horizon", e.horizon},
                      {"confidence_window", e.confidence_window}});
  json j = {{"schema_version", kWireSchemaVersion},
            {"type", "frame"},
            {"step", f.step},
            {"wall_time", f.wall_time},
            {"gap", f.gap},
            {"speed", f.speed},
            {"paused", f.paused},
            {"channels", channels},
            {"prediction", {{"reward", f.record.reward}, {"horizons", horizons}}},
            {"events", events}};
  if (f.house) {
    j["house"] = {{"t_in", f.house->t_in},
                  {"t_out", f.house->t_out},
                  {"heater", f.house->heater_on},
                  {"t_set", f.house->t_set},
                  {"hysteresis_low", f.house->t_set - f.hysteresis_band},
                  {"hysteresis_high", f.house->t_set + f.hysteresis_band}};
  }
  return j;
}

std::optional<TelemetryFrame> FrameBroadcaster::Subscription::pop(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  ready_.wait_for(lock, timeout, [this] { return !queue_.empty() || closed_; });
  if (queue_.empty()) return std::nullopt;
  TelemetryFrame frame = *queue_.front();
  queue_.pop_front();
  if (gap_pending_) {
    frame.gap = true;
    gap_pending_ = false;
  }
  return frame;
}

bool FrameBroadcaster::Subscription::closed() const {
  std::lock_guard lock(mutex_);
  return closed_ && queue_.empty();
}

std::size_t FrameBroadcaster::Subscription::dropped() const {
  std::lock_guard lock(mutex_);
  return dropped_;
}

std::shared_ptr<FrameBroadcaster::Subscription> FrameBroadcaster::subscribe() {
  std::shared_ptr<Subscription> sub(new Subscription(capacity_));
  std::lock_guard lock(mutex_);
  if (closed_) sub->closed_ = true;
  subscribers_.push_back(sub);
  return sub;
}

void FrameBroadcaster::unsubscribe(const std::shared_ptr<Subscription>& subscription) {
  std::lock_guard lock(mutex_);
  std::erase(subscribers_, subscription);
}

void FrameBroadcaster::publish(TelemetryFrame frame) {
  auto shared = std::make_shared<const TelemetryFrame>(std::move(frame));
  std::lock_guard lock(mutex_);
  for (auto& sub : subscribers_) {
    {
      std::lock_guard sub_lock(sub->mutex_);
      if (sub->queue_.size() >= sub->capacity_) {
        sub->queue_.pop_front();
        ++sub->dropped_;
        sub->gap_pending_ = true;
      }
      sub->queue_.push_back(shared);
    }
    sub->ready_.notify_one();
  }
}

void FrameBroadcaster::close() {
  std::lock_guard lock(mutex_);
  closed_ = true;
  for (auto& sub : subscribers_) {
    {
      std::lock_guard sub_lock(sub->mutex_);
      sub->closed_ = true;
    }
    sub->ready_.notify_all();
  }
}

std::size_t FrameBroadcaster::subscribers() const {
  std::lock_guard lock(mutex_);
  return subscribers_.size();
}

SimulationLoop::SimulationLoop(const RunConfig& config)
    : config_(config),
      session_(config, /*wrap_weather=*/true),
      broadcaster_(config.service.queue_capacity),
      speed_(config.service.speed) {
  if (std::find(std::begin(kAllowedSpeeds), std::end(kAllowedSpeeds), speed_) == std::end(kAllowedSpeeds))
    throw ConfigError("service speed must be one of 0, 1, 10, 60, 600");
  if (speed_ == 0.0) {
    paused_ = true;
    speed_ = 1.0;
  }
  for (const auto& h : config_.horizons) detectors_.emplace_back(config_.events, h.label);
}

void SimulationLoop::submit(ControlCommand command) {
  {
    std::lock_guard lock(inbox_mutex_);
    inbox_.push_back(std::move(command));
  }
  inbox_cv_.notify_all();
}

void SimulationLoop::notify() { inbox_cv_.notify_all(); }

void SimulationLoop::wait(std::chrono::steady_clock::time_point deadline, const std::atomic<bool>& stop) {
  std::unique_lock lock(inbox_mutex_);
  inbox_cv_.wait_until(lock, deadline, [&] { return !inbox_.empty() || stop.load(); });
}

std::size_t SimulationLoop::apply_pending() {
  std::deque<ControlCommand> batch;
  {
    std::lock_guard lock(inbox_mutex_);
    batch.swap(inbox_);
  }
  for (const auto& c : batch) apply(c);
  return batch.size();
}

void SimulationLoop::apply(const ControlCommand& c) {
  std::lock_guard lock(state_mutex_);
  switch (c.kind) {
    case CommandKind::SetSetpoint:
      if (auto* plant = dynamic_cast<ThermalPlant*>(&session_.plant())) plant->set_setpoint(c.value);
      break;
    case CommandKind::SetSpeed:
      if (c.value == 0.0) {
        paused_ = true;
      } else {
        speed_ = c.value;
        paused_ = false;
      }
      break;
    case CommandKind::Pause:
      paused_ = true;
      break;
    case CommandKind::Resume:
      paused_ = false;
      break;
    case CommandKind::SelectWeatherScenario:
      if (auto* plant = dynamic_cast<ThermalPlant*>(&session_.plant())) {
        const auto path = c.scenario == "default" ? config_.weather : config_.scenarios.at(c.scenario);
        plant->set_weather(thermal::load_weather(path));
      }
      break;
  }
}

bool SimulationLoop::publish_due(std::size_t step) const {
  // At 600x only every 10th step is broadcast; the learner still sees every step.
  return speed_ < 600.0 || step % 10 == 0;
}

bool SimulationLoop::tick() {
  apply_pending();
  {
    std::lock_guard lock(state_mutex_);
    if (paused_) return false;
  }
  auto row = session_.advance();

  for (std::size_t h = 0; h < detectors_.size(); ++h) {
    auto markers = detectors_[h].push(row.record.normalized[h]);
    pending_events_.insert(pending_events_.end(), markers.begin(), markers.end());
  }

  TelemetryFrame frame;
  frame.step = row.step;
  frame.wall_time = utc_now();
  frame.channel_names = config_.channels();
  frame.channels = row.channels;
  frame.horizons = config_.horizons;
  frame.record = row.record;
  frame.hysteresis_band = config_.hysteresis_band;
  if (const auto* plant = dynamic_cast<const ThermalPlant*>(&session_.plant())) {
    // The plant has already advanced; report the state the row was sampled from.
    thermal::HouseState s = plant->state();
    s.step = row.step;
    s.t_out = row.channels[0];
    s.t_in = row.channels[1];
    s.heater_on = row.channels[2] > 0.0;
    s.t_set = row.channels[3];
    frame.house = s;
  }

  bool publish = false;
  {
    std::lock_guard lock(state_mutex_);
    frame.speed = speed_;
    frame.paused = paused_;
    publish = publish_due(row.step);
    if (publish) {
      frame.events = std::move(pending_events_);
      pending_events_.clear();
    }
    latest_ = frame;
  }
  if (publish) broadcaster_.publish(std::move(frame));
  return true;
}

double SimulationLoop::speed() const {
  std::lock_guard lock(state_mutex_);
  return speed_;
}

bool SimulationLoop::paused() const {
  std::lock_guard lock(state_mutex_);
  return paused_;
}

std::size_t SimulationLoop::step() const {
  std::lock_guard lock(state_mutex_);
  return latest_ ? latest_->step + 1 : 0;
}

std::optional<TelemetryFrame> SimulationLoop::latest() const {
  std::lock_guard lock(state_mutex_);
  return latest_;
}

struct Service::Http {
  httplib::Server server;
};

namespace {

constexpr const char* kPlaceholderPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>NEXTMon</title></head>
<body>
<h1>NEXTMon service</h1>
<p>Dashboard assets are not installed. Point <code>service.assets</code> in the run config at a built dashboard.</p>
<ul>
<li><code>GET /stream</code> newline-delimited JSON telemetry frames</li>
<li><code>POST /command</code> control commands</li>
<li><code>GET /state</code> latest frame</li>
<li><code>GET /healthz</code> liveness</li>
</ul>
</body></html>
)";

}  // namespace

Service::Service(const RunConfig& config, ServiceOptions options)
    : config_(config), options_(options), loop_(config), http_(std::make_unique<Http>()) {
  auto& srv = http_->server;

  srv.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"ok", true}, {"step", loop_.step()}}.dump(), "application/json");
  });

  srv.Get("/state", [this](const httplib::Request&, httplib::Response& res) {
    auto frame = loop_.latest();
    if (!frame) {
      res.status = 503;
      res.set_content(json{{"ok", false}, {"error", "no frame yet"}}.dump(), "application/json");
      return;
    }
    res.set_content(to_json(*frame).dump(), "application/json");
  });

  srv.Post("/command", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      json body = json::parse(req.body);
      auto cmd = parse_command(body, config_);
      const auto at = loop_.step();
      loop_.submit(cmd);
      res.status = 202;
      res.set_content(json{{"ok", true}, {"command", to_json(cmd)}, {"queued_at_step", at}}.dump(),
                      "application/json");
    } catch (const json::exception& e) {
      res.status = 400;
      res.set_content(json{{"ok", false}, {"error", std::string("malformed JSON: ") + e.what()}}.dump(),
                      "application/json");
    } catch (const InputError& e) {
      res.status = 400;
      res.set_content(json{{"ok", false}, {"error", e.what()}}.dump(), "application/json");
    }
  });

  srv.Get("/stream", [this](const httplib::Request&, httplib::Response& res) {
    auto sub = loop_.broadcaster().subscribe();
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "application/x-ndjson",
        [this, sub](std::size_t, httplib::DataSink& sink) {
          auto frame = sub->pop(std::chrono::milliseconds(200));
          if (!sink.is_writable()) return false;
          if (frame) {
            auto line = to_json(*frame).dump() + "\n";
            if (!sink.write(line.data(), line.size())) return false;
          } else if (sub->closed() || stop_.load()) {
            sink.done();
          }
          return true;
        },
        [this, sub](bool) { loop_.broadcaster().unsubscribe(sub); });
  });

  if (!config_.service.assets.empty() && std::filesystem::is_directory(config_.service.assets)) {
    srv.set_mount_point("/", config_.service.assets.string());
  } else {
    srv.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_content(kPlaceholderPage, "text/html"); });
  }
}

Service::~Service() { stop(); }

void Service::start(const std::string& host, int port) {
  auto& srv = http_->server;
  // httplib defaults to SO_REUSEPORT, which lets a second server share a busy
  // port. Plain SO_REUSEADDR still allows quick restarts.
  srv.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  if (port == 0) {
    port_ = srv.bind_to_any_port(host);
    if (port_ <= 0) throw std::runtime_error("cannot bind " + host);
  } else {
    if (!srv.bind_to_port(host, port)) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    port_ = port;
  }
  stop_ = false;
  http_thread_ = std::thread([this] { http_->server.listen_after_bind(); });
  sim_thread_ = std::thread([this] { run_simulation(); });
}

void Service::run_simulation() {
  using clock = std::chrono::steady_clock;
  auto next = clock::now();
  while (!stop_.load()) {
    loop_.apply_pending();
    if (loop_.paused()) {
      loop_.wait(clock::now() + std::chrono::milliseconds(500), stop_);
      next = clock::now();
      continue;
    }
    loop_.tick();
    const double period = config_.dt / loop_.speed() * options_.pacing_scale;
    next += std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(period));
    if (clock::now() > next) next = clock::now();
    // Commands wake the wait early; they are applied before the next step.
    while (!stop_.load() && clock::now() < next) {
      loop_.wait(next, stop_);
      if (loop_.apply_pending() > 0) {
        if (loop_.paused()) break;
        const double p = config_.dt / loop_.speed() * options_.pacing_scale;
        next = std::min(next, clock::now() + std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(p)));
      }
    }
  }
}

void Service::stop() {
  if (stop_.exchange(true)) {
    if (!http_thread_.joinable() && !sim_thread_.joinable()) return;
  }
  loop_.notify();
  loop_.broadcaster().close();
  if (sim_thread_.joinable()) sim_thread_.join();
  http_->server.stop();
  if (http_thread_.joinable()) http_thread_.join();
}

void Service::wait() {
  if (http_thread_.joinable()) http_thread_.join();
}

std::pair<std::string, int> parse_bind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw ConfigError("--bind needs host:port");
  std::string host = bind.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(bind.substr(colon + 1));
  } catch (const std::exception&) {
    throw ConfigError("bad port in '" + bind + "'");
  }
  if (port < 0 || port > 65535) throw ConfigError("port out of range in '" + bind + "'");
  if (host.empty()) host = "0.0.0.0";
  return {host, port};
}

}  // namespace nextmon::service
