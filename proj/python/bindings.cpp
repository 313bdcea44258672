#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "iotstage/calibration.hpp"
#include "iotstage/coordinator.hpp"
#include "iotstage/metrics.hpp"
#include "iotstage/netsim.hpp"
#include "iotstage/scenario.hpp"

namespace py = pybind11;
using namespace iotstage;

namespace {

std::vector<Duration> to_durations(const std::vector<double>& ms) {
  std::vector<Duration> out;
  out.reserve(ms.size());
  for (double v : ms) out.push_back(Duration(std::llround(v * 1e6)));
  return out;
}

py::dict summary_dict(const Summary& s) {
  py::dict d;
  d["mean_ms"] = s.mean_ms;
  d["std_ms"] = s.std_ms;
  d["min_ms"] = s.min_ms;
  d["max_ms"] = s.max_ms;
  d["count"] = s.count;
  d["std_defined"] = s.std_defined;
  return d;
}

py::dict samples_dict(const RunReport& r) {
  py::dict d;
  for (const auto& [tag, samples] : r.samples) {
    py::list values;
    for (auto v : samples) values.append(to_ms(v));
    d[py::str(tag)] = values;
  }
  return d;
}

py::dict estimate_dict(const ChannelEstimate& e) {
  py::dict d;
  d["latency_ms"] = to_ms(e.latency);
  d["jitter_max_ms"] = to_ms(e.jitter_max);
  d["loss"] = e.loss;
  d["sample_count"] = e.sample_count;
  d["method"] = e.method;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Co-simulation core: scenarios, runs, statistics and calibration";

  auto error = py::register_exception<Error>(m, "IotstageError", PyExc_RuntimeError);
  (void)error;

  py::class_<Scenario>(m, "Scenario")
      .def_static("from_json", [](const std::string& text) { return parse_scenario(text); })
      .def_static("load", &load_scenario, py::arg("path"))
      .def("to_json", &serialize_scenario)
      .def_readwrite("name", &Scenario::name)
      .def_readwrite("seed", &Scenario::seed)
      .def_property_readonly("duration_ms", [](const Scenario& s) { return to_ms(s.duration); })
      .def_property_readonly("step_ms", [](const Scenario& s) { return to_ms(s.step); })
      .def_property(
          "mode", [](const Scenario& s) { return std::string(run_mode_name(s.mode)); },
          [](Scenario& s, const std::string& text) {
            const auto mode = parse_run_mode(text);
            if (!mode) throw py::value_error("unknown mode: " + text);
            s.mode = *mode;
          })
      .def_property_readonly("node_ids",
                             [](const Scenario& s) {
                               std::vector<std::string> ids;
                               for (const auto& n : s.nodes) ids.push_back(n.id);
                               return ids;
                             })
      .def("__eq__", [](const Scenario& a, const Scenario& b) { return a == b; });

  m.def(
      "validate",
      [](const Scenario& s) {
        py::list out;
        for (const auto& v : validate(s)) {
          py::dict d;
          d["code"] = v.code;
          d["path"] = v.path;
          d["message"] = v.message;
          out.append(d);
        }
        return out;
      },
      py::arg("scenario"), "List of violations; empty when the scenario is valid.");

  m.def(
      "run",
      [](const Scenario& s, std::size_t run_index) {
        RunReport report;
        {
          py::gil_scoped_release release;
          report = run(RunConfig{s, run_index});
        }
        py::dict d;
        d["run_index"] = report.run_index;
        d["seed"] = report.seed;
        d["trace_hash"] = report.trace_hash;
        d["samples_ms"] = samples_dict(report);
        d["drops"] = report.drops;
        d["max_lag_ms"] = to_ms(report.max_lag);
        d["events_processed"] = report.events_processed;
        return d;
      },
      py::arg("scenario"), py::arg("run_index") = 0);

  m.def(
      "run_repeated",
      [](const Scenario& s, std::size_t n, const std::string& trace_path) {
        RepeatOptions options;
        options.trace_path = trace_path;
        py::gil_scoped_release release;
        return multi_run_report_json(run_repeated(s, n, options));
      },
      py::arg("scenario"), py::arg("n"), py::arg("trace_path") = "",
      "Report document as a JSON string.");

  m.def(
      "summarize",
      [](const std::vector<double>& samples_ms) { return summary_dict(summarize_ms(samples_ms)); },
      py::arg("samples_ms"));
  m.def("format_summary", &format_summary, py::arg("mean_ms"), py::arg("std_ms"));
  m.def(
      "distance_traveled",
      [](double speed_mps, double latency_ms) {
        return distance_traveled(speed_mps, Duration(std::llround(latency_ms * 1e6)));
      },
      py::arg("speed_mps"), py::arg("latency_ms"));
  m.def(
      "in_range",
      [](std::pair<double, double> a, std::pair<double, double> b, double range_m) {
        return in_range(Position{a.first, a.second}, Position{b.first, b.second}, range_m);
      },
      py::arg("a"), py::arg("b"), py::arg("range_m"));

  m.def(
      "estimate",
      [](const std::vector<double>& rtts_ms, std::size_t lost) {
        const auto rtts = to_durations(rtts_ms);
        return estimate_dict(estimate(rtts, lost));
      },
      py::arg("rtts_ms"), py::arg("lost") = 0);
  m.def(
      "probe",
      [](const std::string& target, std::size_t count, double spacing_ms, double timeout_ms) {
        ProbeOptions options;
        options.target = target;
        options.count = count;
        options.spacing = Duration(std::llround(spacing_ms * 1e6));
        options.timeout = Duration(std::llround(timeout_ms * 1e6));
        ProbeResult result;
        {
          py::gil_scoped_release release;
          result = probe(options);
        }
        return estimate_dict(estimate(result));
      },
      py::arg("target"), py::arg("count") = 20, py::arg("spacing_ms") = 20.0, py::arg("timeout_ms") = 1000.0);
}
