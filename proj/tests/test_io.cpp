#include <filesystem>

#include <unistd.h>

#include "doctest.h"
#include "fixtures.hpp"
#include "hear/io.hpp"
#include "hear/rng.hpp"

using namespace hear;
namespace fs = std::filesystem;

TEST_CASE("format_real round-trips") {
  Rng rng(1);
  for (int k = 0; k < 2000; ++k) {
    const double v = (rng.uniform() - 0.5) * std::pow(10.0, rng.range(-12, 12));
    CHECK(parse_real(format_real(v)) == v);
  }
  CHECK(format_real(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(parse_real("-inf") == -std::numeric_limits<double>::infinity());
  CHECK(format_real(0.1) == "0.1");
  CHECK_THROWS_AS(parse_real("1.0x"), FormatError);
  CHECK_THROWS_AS(parse_real(""), FormatError);
}

TEST_CASE("model files") {
  GroundingModel m;
  m.task = ModelTask::type;
  m.seed = 12345678901234567ULL;
  m.config_hash = 0xdeadbeefcafef00dULL;
  m.threshold = -0.125;
  for (std::size_t k = 0; k < kFeatureDim; ++k) m.weights[k] = 1.0 / double(k + 3);
  const auto text = write_model(m);
  CHECK(text.rfind("hear-model 1\n", 0) == 0);
  CHECK(text.find("config_hash deadbeefcafef00d\n") != std::string::npos);
  CHECK(read_model(text) == m);
  m.threshold.reset();
  CHECK(read_model(write_model(m)) == m);
  CHECK_THROWS_AS(read_model("hear-model 2\n"), FormatError);
  auto broken = text;
  broken.replace(broken.find("weight"), 6, "wieght");
  CHECK_THROWS_AS(read_model(broken), FormatError);
}

TEST_CASE("jsonl headers are checked") {
  const auto text = write_jsonl("hear-x", {Json{{"a", 1}}, Json{{"b", 2}}});
  CHECK(text == "{\"format\":\"hear-x\",\"schema_version\":1}\n{\"a\":1}\n{\"b\":2}\n");
  CHECK(read_jsonl(text, "hear-x").size() == 2);
  CHECK_THROWS_AS(read_jsonl(text, "hear-y"), FormatError);
  CHECK_THROWS_AS(read_jsonl("{\"format\":\"hear-x\",\"schema_version\":9}\n", "hear-x"), FormatError);
  CHECK_THROWS_AS(read_jsonl("", "hear-x"), FormatError);
  CHECK_THROWS_AS(read_environments("not json\n"), FormatError);
}

TEST_CASE("suite and corpus files round-trip") {
  const auto& data = fixture::small_suite();
  const auto envs = write_environments(data.corpus.environments);
  CHECK(read_environments(envs) == data.corpus.environments);
  CHECK(write_corpus(read_corpus(write_corpus(data.corpus.records))) == write_corpus(data.corpus.records));
  CHECK(read_corpus(write_corpus(data.corpus.records)) == data.corpus.records);
  CHECK(read_pairs(write_pairs(data.detection_pairs)) == data.detection_pairs);
  CHECK(write_sourced_pairs(read_sourced_pairs(write_sourced_pairs(data.dev))) == write_sourced_pairs(data.dev));
  CHECK(write_episode_tasks(read_episode_tasks(write_episode_tasks(data.episodes))) ==
        write_episode_tasks(data.episodes));

  const fs::path dir = fs::temp_directory_path() / ("hear-io-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  save_suite(dir / "suite", data);
  const auto loaded = load_suite(dir / "suite");
  CHECK(loaded.corpus.records == data.corpus.records);
  CHECK(loaded.train_ids == data.train_ids);
  CHECK(loaded.test_ids == data.test_ids);
  CHECK(loaded.episode_ids == data.episode_ids);
  CHECK(loaded.type_pairs == data.type_pairs);
  CHECK(loaded.one_stage_dev == data.one_stage_dev);
  save_models(dir / "models", fixture::small_models());
  const auto models = load_models(dir / "models");
  CHECK(models.detection == fixture::small_models().detection);
  CHECK(models.one_stage == fixture::small_models().one_stage);
  CHECK_THROWS(load_suite(dir / "missing"));
  fs::remove_all(dir);
}

TEST_CASE("suite config json") {
  SuiteConfig c = fixture::small_config();
  const auto j = to_json(c);
  const auto back = suite_config_from_json(j);
  CHECK(back.hash() == c.hash());
  CHECK(to_json(back) == j);
  const auto partial = suite_config_from_json(Json{{"seed", 9}}, c);
  CHECK(partial.seed == 9);
  CHECK(partial.environments == c.environments);
  CHECK(partial.hash() != c.hash());
  CHECK_THROWS_AS(suite_config_from_json(Json{{"nonsense", 1}}), FormatError);
}

TEST_CASE("report json round-trips") {
  ExperimentReport r;
  r.seed = 5;
  r.config_hash = 0x0123456789abcdefULL;
  r.intrinsic = evaluate_intrinsic(fixture::small_suite(), fixture::small_models(), fixture::small_config());
  r.extrinsic = evaluate_extrinsic(fixture::small_suite(), fixture::small_models(), fixture::small_config());
  const auto text = write_report(r);
  CHECK(text.back() == '\n');
  CHECK(text.find("\"0123456789abcdef\"") != std::string::npos);
  CHECK(write_report(read_report(text)) == text);
  CHECK(render_report(read_report(text)) == render_report(r));
}

TEST_CASE("write_file replaces atomically") {
  const fs::path p = fs::temp_directory_path() / ("hear-wf-" + std::to_string(::getpid()));
  write_file(p, "one");
  write_file(p, "two");
  CHECK(read_file(p) == "two");
  fs::remove(p);
  CHECK_THROWS(read_file(p));
}
