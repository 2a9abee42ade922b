#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "nextmon/config.hpp"
#include "nextmon/errors.hpp"
#include "nextmon/harness.hpp"
#include "nextmon/service.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

void print_summary(const nextmon::RunArtifacts& art, const std::filesystem::path& out) {
  std::cout << art.config.name << ": " << art.rows.size() << " steps -> " << out.string() << "\n";
  for (const auto& m : art.metrics) {
    std::cout << "  " << m.label << " (gamma " << nextmon::format_value(m.gamma) << ")"
              << "  rmse pre/post burn-in " << nextmon::format_value(m.rmse_pre) << " / "
              << nextmon::format_value(m.rmse_post) << "  markers " << m.markers;
    if (m.heater_off_events > 0)
      std::cout << "  anticipated switch-offs " << m.anticipated_off_events << "/" << m.heater_off_events;
    std::cout << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nextmon: multi-timescale nexting monitor for simulated energy systems"};
  app.require_subcommand(1);

  std::string config_path, output, resume_path, csv_path, bind = "127.0.0.1:8080";
  std::optional<std::size_t> steps, stop_at;
  std::optional<double> alpha, lambda, speed;
  std::optional<std::uint64_t> seed;
  std::string demo_name;

  auto* run = app.add_subcommand("run", "Run an experiment and write its artifacts");
  run->add_option("config", config_path, "Run config (JSON)")->required();
  run->add_option("-o,--output", output, "Output directory (overrides output_dir)");
  run->add_option("--steps", steps, "Number of simulation steps");
  run->add_option("--alpha", alpha, "TD step size");
  run->add_option("--lambda", lambda, "Trace decay");
  run->add_option("--seed", seed, "Seed for randomized tile offsets");
  run->add_option("--stop-at", stop_at, "Stop after this many steps and checkpoint");
  run->add_option("--resume", resume_path, "Resume from a checkpoint.json");

  auto* demo = app.add_subcommand("demo", "Run a built-in demonstration");
  demo->add_option("name", demo_name, "Demo name")->required()->check(CLI::IsMember({"watertank"}));
  demo->add_option("-o,--output", output, "Output directory");

  auto* rep = app.add_subcommand("replay", "Replay a recorded steps.csv through a fresh learner");
  rep->add_option("csv", csv_path, "Recorded steps.csv")->required();
  rep->add_option("config", config_path, "Run config used for the recording")->required();

  auto* serve = app.add_subcommand("serve", "Serve the live simulation, telemetry stream and dashboard");
  serve->add_option("config", config_path, "Run config (JSON)")->required();
  serve->add_option("--bind", bind, "host:port to listen on");
  serve->add_option("--speed", speed, "Initial playback speed (0, 1, 10, 60, 600)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) {
      auto config = nextmon::load_config(config_path);
      if (!output.empty()) config.output_dir = output;
      if (steps) config.steps = *steps;
      if (alpha) config.alpha = *alpha;
      if (lambda) config.lambda = *lambda;
      if (seed) config.seed = *seed;
      config.validate();
      nextmon::RunOptions opts;
      opts.stop_at = stop_at;
      if (!resume_path.empty()) {
        std::ifstream in(resume_path);
        if (!in) throw nextmon::ConfigError("cannot open checkpoint " + resume_path);
        try {
          opts.resume = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
          throw nextmon::ConfigError(std::string("malformed checkpoint: ") + e.what());
        }
      }
      auto art = nextmon::run_experiment(config, opts);
      nextmon::write_artifacts(art, config.output_dir);
      print_summary(art, config.output_dir);
    } else if (*demo) {
      auto config = nextmon::watertank_config();
      if (!output.empty()) config.output_dir = output;
      auto art = nextmon::run_experiment(config);
      nextmon::write_artifacts(art, config.output_dir);
      print_summary(art, config.output_dir);
    } else if (*rep) {
      auto config = nextmon::load_config(config_path);
      auto result = nextmon::replay_file(csv_path, config);
      std::cout << "replayed " << result.rows << " rows, " << result.mismatches << " prediction mismatches\n";
      return result.mismatches == 0 ? 0 : kExitRuntime;
    } else if (*serve) {
      auto config = nextmon::load_config(config_path);
      if (speed) config.service.speed = *speed;
      auto [host, port] = nextmon::service::parse_bind(bind);
      nextmon::service::Service service(config);
      service.start(host, port);
      std::cout << "serving on http://" << host << ":" << service.port() << " (Ctrl-C to stop)" << std::endl;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      service.stop();
    }
  } catch (const nextmon::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nextmon::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
