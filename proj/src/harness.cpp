#include "nextmon/harness.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

#include "nextmon/errors.hpp"

namespace nextmon {

using nlohmann::json;

std::string format_value(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 9);
  if (ec != std::errc()) throw std::runtime_error("format_value failed");
  return std::string(buf, end);
}

double log_precision(double value) {
  if (!std::isfinite(value)) return value;
  const auto text = format_value(value);
  double out = 0.0;
  std::from_chars(text.data(), text.data() + text.size(), out);
  return out;
}

Nexter make_nexter(const RunConfig& config) {
  return Nexter(config.resolved_coder(), config.channels(), config.horizons, config.alpha, config.lambda,
                config.reward_channel);
}

Session::Session(const RunConfig& config, bool wrap_weather)
    : config_(config), plant_(make_plant(config, wrap_weather)), nexter_(make_nexter(config)) {
  config_.validate();
}

StepRow Session::advance() {
  auto obs = plant_->prepare();
  for (auto& v : obs) v = log_precision(v);
  StepRow row;
  row.step = plant_->step();
  row.time_hours = static_cast<double>(row.step) * config_.dt / 3600.0;
  row.record = nexter_.step(obs);
  row.channels = std::move(obs);
  plant_->advance();
  return row;
}

json Session::checkpoint() const {
  json bank = json::array();
  const auto& b = nexter_.bank();
  for (std::size_t i = 0; i < b.size(); ++i) {
    auto w = b.weights(i);
    auto z = b.traces(i);
    bank.push_back({{"label", b.horizons()[i].label},
                    {"gamma", b.horizons()[i].gamma},
                    {"weights", std::vector<double>(w.begin(), w.end())},
                    {"traces", std::vector<double>(z.begin(), z.end())}});
  }
  json history = json::array();
  for (const auto& h : nexter_.coder().history()) history.push_back(h);
  const auto& prev = nexter_.previous();
  return {{"checkpoint_version", kCheckpointVersion},
          {"config", to_json(config_)},
          {"step", plant_->step()},
          {"plant", plant_->snapshot()},
          {"learner",
           {{"steps", nexter_.steps_seen()},
            {"alpha", b.alpha()},
            {"lambda", b.lambda()},
            {"num_features", b.num_features()},
            {"previous", prev ? json(prev->active) : json(nullptr)},
            {"history", history},
            {"horizons", bank}}}};
}

void Session::restore(const json& cp) {
  try {
    if (cp.at("checkpoint_version").get<int>() != kCheckpointVersion)
      throw ConfigError("unsupported checkpoint version");
    const auto& learner = cp.at("learner");
    auto& bank = nexter_.bank();
    if (learner.at("num_features").get<std::size_t>() != bank.num_features())
      throw ConfigError("checkpoint feature count does not match config");
    const auto& horizons = learner.at("horizons");
    if (horizons.size() != bank.size()) throw ConfigError("checkpoint horizon count does not match config");
    for (std::size_t i = 0; i < bank.size(); ++i) {
      if (horizons[i].at("gamma").get<double>() != bank.horizons()[i].gamma)
        throw ConfigError("checkpoint horizon '" + bank.horizons()[i].label + "' has a different gamma");
      bank.set_weights(i, horizons[i].at("weights").get<std::vector<double>>());
      bank.set_traces(i, horizons[i].at("traces").get<std::vector<double>>());
    }
    std::deque<std::vector<std::uint32_t>> history;
    for (const auto& h : learner.at("history")) history.push_back(h.get<std::vector<std::uint32_t>>());
    nexter_.coder().restore_history(std::move(history));
    std::optional<features::FeatureVector> prev;
    if (!learner.at("previous").is_null())
      prev = features::FeatureVector{learner.at("previous").get<std::vector<std::uint32_t>>(), bank.num_features()};
    nexter_.restore(learner.at("steps").get<std::size_t>(), std::move(prev));
    plant_->restore(cp.at("plant"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
}

std::vector<double> RunArtifacts::column(const std::string& channel) const {
  std::size_t idx = channels.size();
  for (std::size_t i = 0; i < channels.size(); ++i)
    if (channels[i] == channel) idx = i;
  if (idx == channels.size()) throw ConfigError("no channel '" + channel + "'");
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.channels[idx]);
  return out;
}

std::vector<double> RunArtifacts::normalized_predictions(std::size_t horizon) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.record.normalized[horizon]);
  return out;
}

std::vector<double> RunArtifacts::raw_predictions(std::size_t horizon) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.record.predictions[horizon]);
  return out;
}

std::vector<std::size_t> heater_off_steps(const RunArtifacts& artifacts) {
  const std::string name = artifacts.config.plant == "watertank" ? "control" : "heater";
  auto heater = artifacts.column(name);
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i < heater.size(); ++i)
    if (heater[i - 1] > 0.0 && heater[i] == 0.0) out.push_back(artifacts.rows[i].step);
  return out;
}

namespace {

double window_rmse(std::span<const double> predicted, std::span<const double> reference, std::size_t begin,
                   std::size_t end) {
  if (begin >= std::min(end, predicted.size())) return std::numeric_limits<double>::quiet_NaN();
  return oracle::rmse(predicted, reference, begin, end);
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

RunArtifacts run_experiment(const RunConfig& config, const RunOptions& options) {
  config.validate();
  Session session(config);
  if (options.resume) session.restore(*options.resume);

  const std::size_t available = session.plant().horizon_steps();
  std::size_t total = config.steps ? *config.steps : (available ? available : 12000);
  if (available && total > available)
    throw ConfigError("requested " + std::to_string(total) + " steps but weather covers only " +
                      std::to_string(available));
  if (options.stop_at) total = std::min(total, *options.stop_at);

  RunArtifacts art;
  art.config = config;
  art.channels = config.channels();
  const std::size_t start = session.plant().step();
  if (total > start) art.rows.reserve(total - start);
  while (session.plant().step() < total) art.rows.push_back(session.advance());
  art.checkpoint = session.checkpoint();
  if (art.rows.empty()) return art;

  std::vector<double> signal;
  signal.reserve(art.rows.size());
  for (const auto& r : art.rows) signal.push_back(r.record.reward);

  const std::size_t burn = config.burn_in_steps > start ? config.burn_in_steps - start : 0;
  auto offs = heater_off_steps(art);

  for (std::size_t h = 0; h < config.horizons.size(); ++h) {
    const auto& horizon = config.horizons[h];
    auto ideal = oracle::ideal_prediction(signal, horizon.gamma, config.epsilon);
    auto ideal_norm = ideal.normalized();
    auto pred_norm = art.normalized_predictions(h);
    auto pred_raw = art.raw_predictions(h);

    HorizonMetrics m;
    m.label = horizon.label;
    m.gamma = horizon.gamma;
    m.truncation = ideal.truncation;
    m.tail_bound = ideal.tail_bound;
    const std::size_t mid = std::min(burn, ideal.complete);
    m.rmse_pre = window_rmse(pred_norm, ideal_norm, 0, mid);
    m.rmse_post = window_rmse(pred_norm, ideal_norm, mid, ideal.complete);
    m.rmse_pre_raw = window_rmse(pred_raw, ideal.values, 0, mid);
    m.rmse_post_raw = window_rmse(pred_raw, ideal.values, mid, ideal.complete);

    std::vector<events::EventMarker> markers;
    if (pred_norm.size() >= config.events.smoothing_window)
      markers = events::detect_switch_events(pred_norm, config.events, horizon.label);
    for (auto& mk : markers) mk.step += start;
    m.markers = markers.size();

    for (auto off : offs) {
      if (off < config.burn_in_steps) continue;
      ++m.heater_off_events;
      for (const auto& mk : markers) {
        if (mk.kind == events::EventKind::PredictedSwitchOff && mk.step <= off &&
            mk.step + config.match_window_steps >= off) {
          ++m.anticipated_off_events;
          break;
        }
      }
    }
    m.precursor_fraction = m.heater_off_events
                               ? static_cast<double>(m.anticipated_off_events) / static_cast<double>(m.heater_off_events)
                               : std::numeric_limits<double>::quiet_NaN();

    art.events.insert(art.events.end(), markers.begin(), markers.end());
    art.ideals.push_back(std::move(ideal));
    art.metrics.push_back(m);
  }
  std::stable_sort(art.events.begin(), art.events.end(), [](const auto& a, const auto& b) { return a.step < b.step; });
  return art;
}

std::string steps_csv(const RunArtifacts& art) {
  std::string out = "step,time_hours";
  for (const auto& c : art.channels) out += "," + c;
  for (const auto& h : art.config.horizons) out += ",pred_" + h.label + ",pred_norm_" + h.label + ",td_" + h.label;
  out += ",event\n";

  std::size_t ev = 0;
  for (const auto& r : art.rows) {
    out += std::to_string(r.step);
    out += ',';
    out += format_value(r.time_hours);
    for (double v : r.channels) {
      out += ',';
      out += format_value(v);
    }
    for (std::size_t h = 0; h < r.record.predictions.size(); ++h) {
      out += ',';
      out += format_value(r.record.predictions[h]);
      out += ',';
      out += format_value(r.record.normalized[h]);
      out += ',';
      out += format_value(r.record.td_errors[h]);
    }
    out += ',';
    while (ev < art.events.size() && art.events[ev].step < r.step) ++ev;
    bool first = true;
    for (std::size_t e = ev; e < art.events.size() && art.events[e].step == r.step; ++e) {
      if (!first) out += ';';
      out += std::string(events::to_string(art.events[e].kind)) + ":" + art.events[e].horizon;
      first = false;
    }
    out += '\n';
  }
  return out;
}

std::string ideal_csv(const RunArtifacts& art, std::size_t h) {
  const auto& ideal = art.ideals.at(h);
  auto norm = ideal.normalized();
  std::string out = "step,time_hours,ideal,ideal_normalized,partial\n";
  for (std::size_t i = 0; i < art.rows.size(); ++i) {
    out += std::to_string(art.rows[i].step) + "," + format_value(art.rows[i].time_hours) + "," +
           format_value(ideal.values[i]) + "," + format_value(norm[i]) + "," + (ideal.partial(i) ? "1" : "0") + "\n";
  }
  return out;
}

std::string events_csv(const RunArtifacts& art) {
  std::string out = "step,time_hours,kind,horizon,confidence_window\n";
  for (const auto& e : art.events) {
    const double hours = static_cast<double>(e.step) * art.config.dt / 3600.0;
    out += std::to_string(e.step) + "," + format_value(hours) + "," + std::string(events::to_string(e.kind)) + "," +
           e.horizon + "," + std::to_string(e.confidence_window) + "\n";
  }
  return out;
}

json metrics_json(const RunArtifacts& art) {
  json horizons = json::array();
  for (const auto& m : art.metrics) {
    horizons.push_back({{"label", m.label},
                        {"gamma", m.gamma},
                        {"truncation_window", m.truncation},
                        {"truncation_bound", m.tail_bound},
                        {"rmse_normalized_pre_burn_in", number_or_null(m.rmse_pre)},
                        {"rmse_normalized_post_burn_in", number_or_null(m.rmse_post)},
                        {"rmse_raw_pre_burn_in", number_or_null(m.rmse_pre_raw)},
                        {"rmse_raw_post_burn_in", number_or_null(m.rmse_post_raw)},
                        {"markers", m.markers},
                        {"heater_off_events_after_burn_in", m.heater_off_events},
                        {"anticipated_off_events", m.anticipated_off_events},
                        {"precursor_fraction", number_or_null(m.precursor_fraction)}});
  }
  return {{"name", art.config.name},
          {"plant", art.config.plant},
          {"steps", art.rows.size()},
          {"first_step", art.rows.empty() ? 0 : art.rows.front().step},
          {"burn_in_steps", art.config.burn_in_steps},
          {"match_window_steps", art.config.match_window_steps},
          {"horizons", horizons}};
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

void write_artifacts(const RunArtifacts& art, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const fs::path staging = dir.string() + ".partial";
  std::vector<std::pair<std::string, std::string>> files;
  files.emplace_back("steps.csv", steps_csv(art));
  for (std::size_t h = 0; h < art.ideals.size(); ++h)
    files.emplace_back("ideal_" + art.config.horizons[h].label + ".csv", ideal_csv(art, h));
  files.emplace_back("events.csv", events_csv(art));
  files.emplace_back("metrics.json", metrics_json(art).dump(2) + "\n");
  files.emplace_back("checkpoint.json", art.checkpoint.dump() + "\n");
  files.emplace_back("config.json", to_json(art.config).dump(2) + "\n");
  try {
    fs::remove_all(staging);
    fs::create_directories(staging);
    for (const auto& [name, text] : files) write_file(staging / name, text);
    fs::create_directories(dir);
    for (const auto& [name, _] : files) fs::rename(staging / name, dir / name);
    fs::remove_all(staging);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw;
  }
}

RunArtifacts demo_watertank() { return run_experiment(watertank_config()); }

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

ReplayResult replay(const std::string& csv_text, const RunConfig& config) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) throw InputError("replay: empty CSV");
  auto header = split_csv_line(line);
  auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw InputError("replay: CSV has no column '" + name + "'");
  };
  const auto channels = config.channels();
  std::vector<std::size_t> channel_cols;
  for (const auto& c : channels) channel_cols.push_back(col(c));
  std::vector<std::size_t> pred_cols, norm_cols;
  for (const auto& h : config.horizons) {
    pred_cols.push_back(col("pred_" + h.label));
    norm_cols.push_back(col("pred_norm_" + h.label));
  }

  Nexter nexter = make_nexter(config);
  ReplayResult result;
  std::size_t lineno = 1;
  std::vector<double> obs(channels.size());
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() < header.size() - 1) throw ParseError("replay", lineno, "short row");
    for (std::size_t c = 0; c < channel_cols.size(); ++c) {
      const auto& cell = cells[channel_cols[c]];
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), obs[c]);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) throw ParseError("replay", lineno, "bad number '" + cell + "'");
    }
    auto rec = nexter.step(obs);
    for (std::size_t h = 0; h < config.horizons.size(); ++h) {
      if (format_value(rec.predictions[h]) != cells[pred_cols[h]]) ++result.mismatches;
      if (format_value(rec.normalized[h]) != cells[norm_cols[h]]) ++result.mismatches;
    }
    result.records.push_back(std::move(rec));
    ++result.rows;
  }
  return result;
}

ReplayResult replay_file(const std::filesystem::path& csv, const RunConfig& config) {
  std::ifstream in(csv, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + csv.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return replay(buf.str(), config);
}

}  // namespace nextmon
