#include <algorithm>
#include <span>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "nextmon/config.hpp"
#include "nextmon/errors.hpp"
#include "nextmon/events.hpp"
#include "nextmon/features.hpp"
#include "nextmon/harness.hpp"
#include "nextmon/nexting.hpp"
#include "nextmon/oracle.hpp"
#include "nextmon/thermal.hpp"

namespace py = pybind11;
using namespace nextmon;
using nlohmann::json;

namespace {

// Configuration crosses the boundary as JSON text; the Python side wraps it
// with json.dumps / json.loads.
json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
}

features::FeatureVector sparse(std::vector<std::uint32_t> active, std::size_t total) {
  std::sort(active.begin(), active.end());
  return features::FeatureVector{std::move(active), total};
}

py::dict record_dict(const PredictionRecord& r) {
  py::dict d;
  d["step"] = r.step;
  d["reward"] = r.reward;
  d["predictions"] = r.predictions;
  d["normalized"] = r.normalized;
  d["td_errors"] = r.td_errors;
  return d;
}

py::dict marker_dict(const events::EventMarker& m) {
  py::dict d;
  d["step"] = m.step;
  d["kind"] = std::string(events::to_string(m.kind));
  d["confidence_window"] = m.confidence_window;
  d["horizon"] = m.horizon;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multi-timescale TD(lambda) prediction with tile coding";

  auto base = py::register_exception<std::runtime_error>(m, "NextmonError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<SimulationFault>(m, "SimulationFault", base.ptr());

  m.def("gamma_from_tau", &gamma_from_tau, py::arg("tau"));

  py::class_<Horizon>(m, "Horizon")
      .def_static("from_tau", &Horizon::from_tau, py::arg("tau"), py::arg("label"))
      .def_static("from_gamma", &Horizon::from_gamma, py::arg("gamma"), py::arg("label"))
      .def_readonly("label", &Horizon::label)
      .def_readonly("gamma", &Horizon::gamma)
      .def_property_readonly("timescale", &Horizon::timescale)
      .def("__repr__", [](const Horizon& h) { return "Horizon(" + h.label + ", gamma=" + format_value(h.gamma) + ")"; });

  py::class_<features::HistoryCoder>(m, "TileCoder")
      .def(py::init([](const std::string& coder, std::vector<std::string> layout) {
             return features::HistoryCoder(parse_coder_config(parse_text(coder)), std::move(layout));
           }),
           py::arg("coder_json"), py::arg("layout"))
      .def("encode",
           [](features::HistoryCoder& c, const std::vector<double>& values) {
             return c.encode(std::span<const double>(values)).active;
           })
      .def("reset", &features::HistoryCoder::reset)
      .def_property_readonly("total_features", &features::HistoryCoder::total_features)
      .def_property_readonly("active_per_step",
                             [](const features::HistoryCoder& c) { return c.coder().config().active_per_slot(); });

  py::class_<PredictorBank>(m, "PredictorBank")
      .def(py::init<std::vector<Horizon>, std::size_t, double, double>(), py::arg("horizons"),
           py::arg("num_features"), py::arg("alpha"), py::arg("lam"))
      .def("predict",
           [](const PredictorBank& b, std::vector<std::uint32_t> active) {
             return b.predict(sparse(std::move(active), b.num_features()));
           })
      .def("update",
           [](PredictorBank& b, std::vector<std::uint32_t> phi, double reward, std::vector<std::uint32_t> phi_next) {
             return b.update(sparse(std::move(phi), b.num_features()), reward,
                             sparse(std::move(phi_next), b.num_features()));
           },
           py::arg("phi"), py::arg("reward"), py::arg("phi_next"))
      .def("weights", [](const PredictorBank& b, std::size_t h) {
        auto w = b.weights(h);
        return std::vector<double>(w.begin(), w.end());
      })
      .def("set_weights", &PredictorBank::set_weights)
      .def("reset", &PredictorBank::reset)
      .def_property_readonly("num_features", &PredictorBank::num_features);

  py::class_<Nexter>(m, "Nexter")
      .def(py::init([](const std::string& coder, std::vector<std::string> layout, std::vector<Horizon> horizons,
                       std::optional<double> alpha, double lam, const std::string& reward_channel) {
             return Nexter(parse_coder_config(parse_text(coder)), std::move(layout), std::move(horizons), alpha, lam,
                           reward_channel);
           }),
           py::arg("coder_json"), py::arg("layout"), py::arg("horizons"), py::arg("alpha") = py::none(),
           py::arg("lam") = 0.9, py::arg("reward_channel"))
      .def("step",
           [](Nexter& n, const std::vector<double>& observation) {
             return record_dict(n.step(std::span<const double>(observation)));
           })
      .def("reset", &Nexter::reset)
      .def_property_readonly("alpha", [](const Nexter& n) { return n.bank().alpha(); });

  m.def(
      "ideal_prediction",
      [](const std::vector<double>& signal, double gamma, double epsilon) {
        auto r = oracle::ideal_prediction(signal, gamma, epsilon);
        py::dict d;
        d["values"] = r.values;
        d["normalized"] = r.normalized();
        d["truncation"] = r.truncation;
        d["tail_bound"] = r.tail_bound;
        d["complete"] = r.complete;
        return d;
      },
      py::arg("signal"), py::arg("gamma"), py::arg("epsilon") = 1e-6);
  m.def(
      "rmse",
      [](const std::vector<double>& a, const std::vector<double>& b, std::size_t begin, std::optional<std::size_t> end) {
        return oracle::rmse(a, b, begin, end.value_or(a.size()));
      },
      py::arg("predicted"), py::arg("reference"), py::arg("begin") = 0, py::arg("end") = py::none());

  py::class_<thermal::HouseParams>(m, "HouseParams")
      .def(py::init<>())
      .def_readwrite("heater_power", &thermal::HouseParams::heater_power)
      .def_readwrite("efficiency", &thermal::HouseParams::efficiency)
      .def_property_readonly("capacity", &thermal::HouseParams::capacity)
      .def_property_readonly("conductance", &thermal::HouseParams::conductance)
      .def_property_readonly("full_power_offset", &thermal::HouseParams::full_power_offset);
  py::class_<thermal::HouseState>(m, "HouseState")
      .def(py::init([](double t_in, double t_out, bool heater_on, double t_set) {
             return thermal::HouseState{0, t_in, t_out, heater_on, t_set};
           }),
           py::arg("t_in"), py::arg("t_out"), py::arg("heater_on") = false, py::arg("t_set") = 23.0)
      .def_readwrite("step", &thermal::HouseState::step)
      .def_readwrite("t_in", &thermal::HouseState::t_in)
      .def_readwrite("t_out", &thermal::HouseState::t_out)
      .def_readwrite("heater_on", &thermal::HouseState::heater_on)
      .def_readwrite("t_set", &thermal::HouseState::t_set);
  m.def("step_house", &thermal::step_house, py::arg("params"), py::arg("state"), py::arg("dt") = 60.0);
  m.def("control_hysteresis", &thermal::control_hysteresis, py::arg("state"), py::arg("band") = 1.0);

  m.def(
      "detect_switch_events",
      [](const std::vector<double>& prediction, std::size_t smoothing_window, std::size_t half_width,
         double prominence_fraction, std::size_t range_window, const std::string& horizon) {
        events::EventParams p;
        p.smoothing_window = smoothing_window;
        p.half_width = half_width;
        p.prominence_fraction = prominence_fraction;
        p.range_window = range_window;
        py::list out;
        for (const auto& mk : events::detect_switch_events(prediction, p, horizon)) out.append(marker_dict(mk));
        return out;
      },
      py::arg("prediction"), py::arg("smoothing_window") = 15, py::arg("half_width") = 20,
      py::arg("prominence_fraction") = 0.1, py::arg("range_window") = 1440, py::arg("horizon") = "");

  py::class_<RunConfig>(m, "RunConfig")
      .def_readonly("name", &RunConfig::name)
      .def_readonly("plant", &RunConfig::plant)
      .def_readonly("horizons", &RunConfig::horizons)
      .def_readwrite("steps", &RunConfig::steps)
      .def_readwrite("seed", &RunConfig::seed)
      .def("to_json", [](const RunConfig& c) { return to_json(c).dump(); });
  m.def("load_config", &load_config, py::arg("path"));
  m.def(
      "parse_config",
      [](const std::string& text, const std::filesystem::path& base_dir) { return parse_config(parse_text(text), base_dir); },
      py::arg("config_json"), py::arg("base_dir") = std::filesystem::path{});
  m.def("watertank_config", &watertank_config);

  py::class_<RunArtifacts>(m, "RunArtifacts")
      .def_readonly("config", &RunArtifacts::config)
      .def_readonly("channels", &RunArtifacts::channels)
      .def("__len__", [](const RunArtifacts& a) { return a.rows.size(); })
      .def("column", &RunArtifacts::column)
      .def("normalized_predictions", &RunArtifacts::normalized_predictions)
      .def("raw_predictions", &RunArtifacts::raw_predictions)
      .def("ideal", [](const RunArtifacts& a, std::size_t h) { return a.ideals.at(h).values; })
      .def("events", [](const RunArtifacts& a) {
        py::list out;
        for (const auto& mk : a.events) out.append(marker_dict(mk));
        return out;
      })
      .def("metrics_json", [](const RunArtifacts& a) { return metrics_json(a).dump(); })
      .def("steps_csv", &steps_csv)
      .def("write", &write_artifacts, py::arg("directory"));
  m.def(
      "run_experiment",
      [](const RunConfig& c, std::optional<std::size_t> stop_at) {
        RunOptions opts;
        opts.stop_at = stop_at;
        py::gil_scoped_release release;
        return run_experiment(c, opts);
      },
      py::arg("config"), py::arg("stop_at") = py::none());
  m.def("demo_watertank", [] {
    py::gil_scoped_release release;
    return demo_watertank();
  });
  m.def(
      "replay",
      [](const std::string& csv_text, const RunConfig& c) {
        auto r = replay(csv_text, c);
        py::dict d;
        d["rows"] = r.rows;
        d["mismatches"] = r.mismatches;
        return d;
      },
      py::arg("csv_text"), py::arg("config"));
}
