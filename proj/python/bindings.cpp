#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hear/experiment.hpp"
#include "hear/io.hpp"

namespace py = pybind11;
using namespace hear;

namespace {

SuiteConfig config_from(const std::string& text) {
  return text.empty() ? SuiteConfig{} : suite_config_from_json(Json::parse(text));
}

CorruptionRates rates_from(const py::dict& d) {
  CorruptionRates r;
  for (const auto& [k, v] : d) {
    const auto key = py::cast<std::string>(k);
    if (key == "room") r.room = py::cast<double>(v);
    else if (key == "object") r.object = py::cast<double>(v);
    else if (key == "direction") r.direction = py::cast<double>(v);
    else if (key == "extrinsic") r.extrinsic = py::cast<double>(v);
    else if (key == "instruction") r.instruction = py::cast<double>(v);
    else if (key == "max_hallucinations") r.max_hallucinations = py::cast<int>(v);
    else throw py::key_error(key);
  }
  return r;
}

}  // namespace

PYBIND11_MODULE(_hear, m) {
  m.doc() = "Hallucination detection and remedy for navigation instructions";
  m.attr("SCHEMA_VERSION") = kSchemaVersion;

  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

  m.def("default_config", [] { return to_json(SuiteConfig{}).dump(); },
        "Default suite configuration as JSON text.");
  m.def("config_hash", [](const std::string& config) { return config_from(config).hash(); }, py::arg("config") = "");

  m.def("generate_environments",
        [](std::uint64_t seed, int count, const std::string& config) {
          return write_environments(generate_environments(seed, count, config_from(config).env));
        },
        py::arg("seed"), py::arg("count"), py::arg("config") = "",
        "Environments as hear-environments JSONL text.");

  m.def("generate_corpus",
        [](std::uint64_t seed, int environments, int routes_per_env) {
          const auto c = generate_corpus(seed, environments, routes_per_env, EnvConfig{}, 3, 6);
          return py::make_tuple(write_environments(c.environments), write_corpus(c.records));
        },
        py::arg("seed"), py::arg("environments"), py::arg("routes_per_env"),
        "(environments JSONL, corpus JSONL) of clean speaker instructions.");

  m.def("corrupt_corpus",
        [](const std::string& environments, const std::string& corpus, const py::dict& rates, std::uint64_t seed,
           bool calibrated) {
          Corpus c;
          c.environments = read_environments(environments);
          c.records = read_corpus(corpus);
          c.index();
          const auto r = calibrated ? CorruptionRates::paper_calibrated() : rates_from(rates);
          auto out = corrupt_corpus(c, r, seed);
          for (std::size_t k = 0; k < out.size(); ++k) c.records[k].instruction = std::move(out[k]);
          return write_corpus(c.records);
        },
        py::arg("environments"), py::arg("corpus"), py::arg("rates") = py::dict(), py::arg("seed") = 0,
        py::arg("calibrated") = false, "Corrupted copy of a corpus, as JSONL text.");

  m.def("corruption_stats",
        [](const std::string& corpus) {
          std::vector<AnnotatedInstruction> anns;
          for (const auto& r : read_corpus(corpus)) anns.push_back(r.instruction);
          const auto s = corruption_stats(anns);
          py::dict d;
          d["instructions"] = s.instructions;
          d["with_hallucination"] = s.with_hallucination;
          d["phrases"] = s.phrases;
          d["hallucinated_phrases"] = s.hallucinated_phrases;
          d["instruction_rate"] = s.instruction_rate();
          d["phrase_rate"] = s.phrase_rate();
          return d;
        },
        py::arg("corpus"));

  m.def("select_threshold", &select_threshold, py::arg("scores"), py::arg("labels"));
  m.def("macro_f1", py::overload_cast<const std::vector<bool>&, const std::vector<bool>&>(&macro_f1),
        py::arg("predictions"), py::arg("golds"));

  m.def("normalize_model", [](const std::string& text) { return write_model(read_model(text)); },
        py::arg("text"), "Parses and re-serializes a model file.");

  m.def("generate_suite",
        [](const std::string& config, const std::string& out_dir) {
          const auto c = config_from(config);
          py::gil_scoped_release release;
          save_suite(out_dir, generate_suite(c));
          write_file(std::filesystem::path(out_dir) / "config.json", to_json(c).dump(2) + "\n");
        },
        py::arg("config"), py::arg("out_dir"));

  m.def("train",
        [](const std::string& data_dir, const std::string& out_dir) {
          py::gil_scoped_release release;
          const auto c = suite_config_from_json(Json::parse(read_file(std::filesystem::path(data_dir) / "config.json")));
          save_models(out_dir, train_models(load_suite(data_dir), c));
        },
        py::arg("data_dir"), py::arg("out_dir"));

  m.def("evaluate",
        [](const std::string& data_dir, const std::string& models_dir) {
          py::gil_scoped_release release;
          const auto c = suite_config_from_json(Json::parse(read_file(std::filesystem::path(data_dir) / "config.json")));
          const auto data = load_suite(data_dir);
          const auto models = load_models(models_dir);
          ExperimentReport r;
          r.seed = c.seed;
          r.config_hash = c.hash();
          r.intrinsic = evaluate_intrinsic(data, models, c);
          r.extrinsic = evaluate_extrinsic(data, models, c);
          return write_report(r);
        },
        py::arg("data_dir"), py::arg("models_dir"), "Report JSON text.");

  m.def("run_experiment",
        [](const std::string& config) {
          const auto c = config_from(config);
          py::gil_scoped_release release;
          return write_report(run_experiment(c));
        },
        py::arg("config") = "", "In-memory generate, train and evaluate; report JSON text.");

  m.def("render_report", [](const std::string& report) { return render_report(read_report(report)); },
        py::arg("report"));
}
