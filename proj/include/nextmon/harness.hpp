#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nextmon/config.hpp"
#include "nextmon/events.hpp"
#include "nextmon/nexting.hpp"
#include "nextmon/oracle.hpp"
#include "nextmon/plant.hpp"

namespace nextmon {

inline constexpr int kCheckpointVersion = 1;

/// Rounds to the 9 significant digits written to CSV. The learner observes
/// values at this precision so a logged run can be replayed exactly.
double log_precision(double value);
/// `%.9g`-style text, locale independent.
std::string format_value(double value);

struct StepRow {
  std::size_t step = 0;
  double time_hours = 0.0;
  std::vector<double> channels;
  PredictionRecord record;
};

/// Plant and learner advanced in lockstep.
class Session {
 public:
  explicit Session(const RunConfig& config, bool wrap_weather = false);

  StepRow advance();

  const RunConfig& config() const { return config_; }
  Plant& plant() { return *plant_; }
  const Plant& plant() const { return *plant_; }
  Nexter& nexter() { return nexter_; }
  const Nexter& nexter() const { return nexter_; }

  /// Config, plant state, coder history, previous feature vector and bank.
  nlohmann::json checkpoint() const;
  void restore(const nlohmann::json& checkpoint);

 private:
  RunConfig config_;
  std::unique_ptr<Plant> plant_;
  Nexter nexter_;
};

Nexter make_nexter(const RunConfig& config);

struct HorizonMetrics {
  std::string label;
  double gamma = 0.0;
  std::size_t truncation = 0;
  double tail_bound = 0.0;
  /// Normalized prediction vs normalized ideal, before and after burn-in.
  double rmse_pre = 0.0;
  double rmse_post = 0.0;
  double rmse_pre_raw = 0.0;
  double rmse_post_raw = 0.0;
  std::size_t markers = 0;
  std::size_t heater_off_events = 0;
  std::size_t anticipated_off_events = 0;
  double precursor_fraction = 0.0;
};

struct RunArtifacts {
  RunConfig config;
  std::vector<std::string> channels;
  std::vector<StepRow> rows;
  std::vector<oracle::ReturnSeries> ideals;
  std::vector<events::EventMarker> events;
  std::vector<HorizonMetrics> metrics;
  nlohmann::json checkpoint;

  /// One channel column across all rows.
  std::vector<double> column(const std::string& channel) const;
  std::vector<double> normalized_predictions(std::size_t horizon) const;
  std::vector<double> raw_predictions(std::size_t horizon) const;
};

struct RunOptions {
  /// Stop after this many total steps (checkpoint is taken there).
  std::optional<std::size_t> stop_at;
  /// Continue from a checkpoint produced by an earlier run.
  std::optional<nlohmann::json> resume;
};

/// Simulates, learns, scores against ideal predictions and detects events.
/// Nothing is written; see write_artifacts.
RunArtifacts run_experiment(const RunConfig& config, const RunOptions& options = {});

/// Writes steps.csv, ideal_<label>.csv, events.csv, metrics.json,
/// checkpoint.json and config.json. Either all files land in `dir` or none.
void write_artifacts(const RunArtifacts& artifacts, const std::filesystem::path& dir);

std::string steps_csv(const RunArtifacts& artifacts);
std::string ideal_csv(const RunArtifacts& artifacts, std::size_t horizon);
std::string events_csv(const RunArtifacts& artifacts);
nlohmann::json metrics_json(const RunArtifacts& artifacts);

/// Runs the synthetic water tank demo.
RunArtifacts demo_watertank();

/// Heater-off steps (heater channel drops from 1 to 0).
std::vector<std::size_t> heater_off_steps(const RunArtifacts& artifacts);

struct ReplayResult {
  std::size_t rows = 0;
  /// Prediction cells whose replayed text differs from the recorded text.
  std::size_t mismatches = 0;
  std::vector<PredictionRecord> records;
};

/// Feeds the channel columns of a steps.csv through a fresh learner and
/// compares the predictions with the recorded ones.
ReplayResult replay(const std::string& csv_text, const RunConfig& config);
ReplayResult replay_file(const std::filesystem::path& csv, const RunConfig& config);

}  // namespace nextmon
