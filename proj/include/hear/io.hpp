#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hear/env.hpp"
#include "hear/experiment.hpp"
#include "hear/grounding.hpp"
#include "hear/instruction.hpp"
#include "hear/perturb.hpp"
#include "hear/remedy.hpp"

namespace hear {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Thrown for malformed or mismatched files.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// -- JSON mappings -------------------------------------------------------------

Json to_json(const Environment& env);
Environment environment_from_json(const Json& j);
Json to_json(const Route& route);
Route route_from_json(const Json& j);
Json to_json(const AnnotatedInstruction& ann);
AnnotatedInstruction instruction_from_json(const Json& j);
Json to_json(const CorpusRecord& rec);
CorpusRecord record_from_json(const Json& j);
Json to_json(const DetectionExample& ex);
DetectionExample example_from_json(const Json& j);
Json to_json(const PairedExample& p);
PairedExample pair_from_json(const Json& j);
Json to_json(const SourcedPair& p);
SourcedPair sourced_pair_from_json(const Json& j);
Json to_json(const EpisodeTask& t);
EpisodeTask episode_task_from_json(const Json& j);
Json to_json(const Highlight& h);
Json to_json(const SuggestionList& s);
Json to_json(const Episode& e);
Episode episode_from_json(const Json& j);
Json to_json(const SuiteConfig& c);
/// Keys absent from `j` keep the values in `base`. Unknown keys are rejected.
SuiteConfig suite_config_from_json(const Json& j, SuiteConfig base = {});
Json to_json(const ExperimentReport& r);
ExperimentReport report_from_json(const Json& j);

// -- line-delimited files ------------------------------------------------------
//
// Every file starts with a header line {"format": <name>, "schema_version": 1}
// followed by one JSON record per line. Keys are sorted and numbers use the
// shortest round-tripping form, so serialize/parse/serialize is byte-stable.

std::string write_jsonl(std::string_view format, const std::vector<Json>& records);
std::vector<Json> read_jsonl(std::string_view text, std::string_view format);

std::string write_environments(const std::vector<Environment>& envs);
std::vector<Environment> read_environments(std::string_view text);

struct NamedRoute {
  std::string route_id;
  Route route;

  bool operator==(const NamedRoute&) const = default;
};
std::string write_routes(const std::vector<NamedRoute>& routes);
std::vector<NamedRoute> read_routes(std::string_view text);

/// Records only; environments live in their own file.
std::string write_corpus(const std::vector<CorpusRecord>& records);
std::vector<CorpusRecord> read_corpus(std::string_view text);

std::string write_pairs(const std::vector<PairedExample>& pairs);
std::vector<PairedExample> read_pairs(std::string_view text);

std::string write_sourced_pairs(const std::vector<SourcedPair>& pairs);
std::vector<SourcedPair> read_sourced_pairs(std::string_view text);

std::string write_episode_tasks(const std::vector<EpisodeTask>& tasks);
std::vector<EpisodeTask> read_episode_tasks(std::string_view text);

// -- model files -----------------------------------------------------------------
//
//   hear-model <schema_version>
//   task <task>
//   seed <integer>
//   config_hash <16 hex digits>
//   threshold <real|inf|-inf|none>
//   weight <feature name> <real>      (one line per feature, fixed order)

std::string write_model(const GroundingModel& model);
GroundingModel read_model(std::string_view text);

/// Shortest decimal form that parses back to the same double; "inf"/"-inf".
std::string format_real(double v);
double parse_real(std::string_view text);

// -- reports ---------------------------------------------------------------------

/// Pretty-printed JSON with a trailing newline.
std::string write_report(const ExperimentReport& report);
ExperimentReport read_report(std::string_view text);

// -- directories -------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary file and rename.
void write_file(const std::filesystem::path& path, std::string_view content);

/// Suite layout: environments.jsonl, corpus.jsonl, splits.json, pairs-*.jsonl,
/// dev.jsonl, test.jsonl, type-dev.jsonl, one-stage-dev.jsonl, episodes.jsonl.
void save_suite(const std::filesystem::path& dir, const SuiteData& data);
SuiteData load_suite(const std::filesystem::path& dir);

/// Model layout: detection.model, type.model, same-env.model, one-stage.model.
void save_models(const std::filesystem::path& dir, const TrainedModels& models);
TrainedModels load_models(const std::filesystem::path& dir);

}  // namespace hear
