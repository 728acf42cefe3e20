#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hear/experiment.hpp"
#include "hear/http.hpp"
#include "hear/io.hpp"
#include "hear/service.hpp"

namespace fs = std::filesystem;
using namespace hear;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
};

SuiteConfig load_config(const Globals& g, const std::optional<fs::path>& data_dir) {
  SuiteConfig c;
  if (data_dir && fs::exists(*data_dir / "config.json")) {
    c = suite_config_from_json(Json::parse(read_file(*data_dir / "config.json")), c);
  }
  if (!g.config.empty()) c = suite_config_from_json(Json::parse(read_file(g.config)), c);
  return c;
}

void emit(const Globals& g, const std::string& content) {
  if (g.out.empty()) {
    std::cout << content;
  } else {
    write_file(g.out, content);
  }
}

void require_out(const Globals& g, const char* what) {
  if (g.out.empty()) throw CLI::ValidationError("--out", std::string(what) + " needs --out");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hallucination detection and remedy for navigation instructions"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->configurable(false);
  app.add_option("--config", g.config, "Suite configuration JSON file")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output file or directory");

  // gen-env
  auto* gen_env = app.add_subcommand("gen-env", "Generate environments");
  int nodes = 0;
  int count = 1;
  gen_env->add_option("--nodes", nodes, "Exact node count (default: config range)")->check(CLI::PositiveNumber);
  gen_env->add_option("--count", count, "Number of environments")->check(CLI::PositiveNumber);

  // gen-data
  auto* gen_data = app.add_subcommand("gen-data", "Generate corpus splits, training pairs and episodes");
  std::string envs_file;
  gen_data->add_option("--envs", envs_file, "Use environments from this file")->check(CLI::ExistingFile);

  // train
  auto* train = app.add_subcommand("train", "Train grounding models");
  std::string data_dir;
  std::string task = "all";
  std::string pairs_file;
  train->add_option("--data", data_dir, "Suite directory from gen-data")->required()->check(CLI::ExistingDirectory);
  train->add_option("--task", task, "detection|type|same_env|one_stage|all")
      ->check(CLI::IsMember({"detection", "type", "same_env", "one_stage", "all"}));
  train->add_option("--pairs", pairs_file, "Training pairs (single task only)")->check(CLI::ExistingFile);

  // eval
  auto* eval = app.add_subcommand("eval", "Run intrinsic and extrinsic evaluation");
  std::string suite = "all";
  std::string models_dir;
  std::string text_out;
  eval->add_option("--data", data_dir, "Suite directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--models", models_dir, "Model directory from train")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--suite", suite, "intrinsic|extrinsic|all")->check(CLI::IsMember({"intrinsic", "extrinsic", "all"}));
  eval->add_option("--text", text_out, "Also write the plain-text summary here");

  // report
  auto* report = app.add_subcommand("report", "Render a report file as text tables");
  std::string report_in;
  report->add_option("--in", report_in, "Report JSON from eval")->required()->check(CLI::ExistingFile);

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Serve navigation sessions over HTTP");
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string log_dir = "sessions";
  std::string static_dir;
  std::size_t tasks = 6;
  serve_cmd->add_option("--data", data_dir, "Suite directory")->required()->check(CLI::ExistingDirectory);
  serve_cmd->add_option("--models", models_dir, "Model directory")->required()->check(CLI::ExistingDirectory);
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--port", port);
  serve_cmd->add_option("--log-dir", log_dir, "Event log directory");
  serve_cmd->add_option("--static", static_dir, "UI bundle served at /ui")->check(CLI::ExistingDirectory);
  serve_cmd->add_option("--tasks", tasks, "Route tasks per session")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_env) {
      SuiteConfig c = load_config(g, std::nullopt);
      if (g.seed) c.seed = *g.seed;
      if (nodes > 0) c.env.min_nodes = c.env.max_nodes = nodes;
      emit(g, write_environments(generate_environments(c.seed, count, c.env)));
    } else if (*gen_data) {
      require_out(g, "gen-data");
      SuiteConfig c = load_config(g, std::nullopt);
      if (g.seed) c.seed = *g.seed;
      const SuiteData data = envs_file.empty() ? generate_suite(c)
                                               : generate_suite(c, read_environments(read_file(envs_file)));
      save_suite(g.out, data);
      write_file(fs::path(g.out) / "config.json", to_json(c).dump(2) + "\n");
      std::cerr << "train " << data.train_ids.size() << " dev " << data.dev_ids.size() << " test "
                << data.test_ids.size() << " episodes " << data.episodes.size() << " routes; "
                << data.detection_pairs.size() << " detection pairs\n";
    } else if (*train) {
      require_out(g, "train");
      SuiteConfig c = load_config(g, fs::path(data_dir));
      if (g.seed) c.train.seed = *g.seed;
      const SuiteData data = load_suite(data_dir);
      if (task == "all") {
        if (!pairs_file.empty()) throw CLI::ValidationError("--pairs", "needs a single --task");
        save_models(g.out, train_models(data, c));
      } else {
        std::vector<PairedExample> pairs;
        std::vector<PairedExample> dev;
        ModelTask mt = ModelTask::detection;
        std::vector<PairedExample> detection_dev;
        for (const auto& sp : data.dev) detection_dev.push_back(sp.pair);
        if (task == "detection") {
          pairs = data.detection_pairs;
          dev = detection_dev;
        } else if (task == "same_env") {
          pairs = data.same_env_pairs;
          dev = detection_dev;
        } else if (task == "type") {
          pairs = data.type_pairs;
          dev = data.type_dev;
          mt = ModelTask::type;
        } else {
          pairs = data.one_stage_pairs;
          dev = data.one_stage_dev;
          mt = ModelTask::one_stage;
        }
        if (!pairs_file.empty()) pairs = read_pairs(read_file(pairs_file));
        write_file(g.out, write_model(train_and_calibrate(data.corpus, pairs, dev, mt, c.train, c.features)));
      }
    } else if (*eval) {
      require_out(g, "eval");
      SuiteConfig c = load_config(g, fs::path(data_dir));
      if (g.seed) c.seed = *g.seed;
      const SuiteData data = load_suite(data_dir);
      const TrainedModels models = load_models(models_dir);
      ExperimentReport r;
      r.seed = c.seed;
      r.config_hash = c.hash();
      if (suite != "extrinsic") r.intrinsic = evaluate_intrinsic(data, models, c);
      if (suite != "intrinsic") r.extrinsic = evaluate_extrinsic(data, models, c);
      write_file(g.out, write_report(r));
      const auto text = render_report(r);
      if (!text_out.empty()) write_file(text_out, text);
      std::cout << text;
    } else if (*report) {
      emit(g, render_report(read_report(read_file(report_in))));
    } else if (*serve_cmd) {
      SuiteConfig c = load_config(g, fs::path(data_dir));
      ServiceConfig sc;
      sc.log_dir = log_dir;
      sc.tasks_per_session = tasks;
      Service service(load_suite(data_dir), load_models(models_dir), c, sc);
      std::cerr << "serving on http://" << host << ":" << port << "\n";
      serve(service, host, port, static_dir);
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
