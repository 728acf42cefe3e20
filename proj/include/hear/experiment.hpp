#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hear/env.hpp"
#include "hear/follower.hpp"
#include "hear/grounding.hpp"
#include "hear/instruction.hpp"
#include "hear/metrics.hpp"
#include "hear/perturb.hpp"
#include "hear/remedy.hpp"

namespace hear {

/// What a navigator is shown.
enum class Condition { none, model_highlights, model_full, oracle_highlights, oracle_full };

inline constexpr Condition kAllConditions[] = {Condition::none, Condition::model_highlights,
                                               Condition::model_full, Condition::oracle_highlights,
                                               Condition::oracle_full};

std::string_view to_string(Condition c);
Condition condition_from_string(std::string_view text);
bool shows_highlights(Condition c);
bool shows_suggestions(Condition c);
bool is_oracle(Condition c);
FollowerMode follower_mode_for(Condition c);

struct SuiteConfig {
  std::uint64_t seed = 42;
  int environments = 20;
  EnvConfig env;
  int min_steps = 3;
  int max_steps = 6;
  int train_routes_per_env = 55;
  int eval_routes_per_env = 13;
  int episode_routes_per_env = 5;
  std::size_t train_pairs = 2000;
  std::size_t dev_examples = 500;
  std::size_t test_examples = 500;
  std::size_t episodes = 100;
  PairOptions pairs{.pairs_per_instruction = 3};
  CorruptionRates episode_rates = CorruptionRates::paper_calibrated();
  TrainConfig train;
  FeatureConfig features;
  int check_budget = 6;
  std::size_t top_k = kDefaultTopK;
  std::size_t highlight_cap = kDefaultHighlightCap;

  std::uint64_t hash() const;
};

/// A corrupted instruction on a held-out route, used for navigation episodes.
struct EpisodeTask {
  std::string id;
  std::string route_id;
  AnnotatedInstruction instruction;
};

struct SuiteData {
  Corpus corpus;
  std::vector<std::string> train_ids;
  std::vector<std::string> dev_ids;
  std::vector<std::string> test_ids;
  std::vector<std::string> episode_ids;
  std::vector<PairedExample> detection_pairs;
  std::vector<PairedExample> same_env_pairs;
  std::vector<PairedExample> type_pairs;
  std::vector<PairedExample> one_stage_pairs;
  std::vector<SourcedPair> dev;
  std::vector<SourcedPair> test;
  std::vector<PairedExample> type_dev;
  std::vector<PairedExample> one_stage_dev;
  std::vector<EpisodeTask> episodes;
};

/// Environments "env-00", "env-01", ... each from its own derived seed.
std::vector<Environment> generate_environments(std::uint64_t seed, int count, const EnvConfig& config);

/// Environments, clean corpus, training pairs, balanced dev/test sets and
/// navigation episodes, all derived from `config.seed`.
SuiteData generate_suite(const SuiteConfig& config);
/// Same, over the given environments instead of freshly generated ones.
SuiteData generate_suite(const SuiteConfig& config, std::vector<Environment> environments);

/// Clean corpus over freshly generated environments: routes_per_env routes
/// each, ids "<env>/<tag>-NNNN".
Corpus generate_corpus(std::uint64_t seed, int environments, int routes_per_env,
                       const EnvConfig& env_config, int min_steps, int max_steps,
                       const std::string& tag = "route");

struct TrainedModels {
  GroundingModel detection;
  GroundingModel type;
  GroundingModel same_env_detection;
  GroundingModel one_stage;
};

/// Trains all models and selects their thresholds on the dev split.
TrainedModels train_models(const SuiteData& data, const SuiteConfig& config);

/// Trains one model on `pairs` and sets its threshold from `dev` (both members).
GroundingModel train_and_calibrate(const Corpus& corpus, const std::vector<PairedExample>& pairs,
                                   const std::vector<PairedExample>& dev, ModelTask task,
                                   const TrainConfig& train, const FeatureConfig& features);

struct SizeBucket {
  std::size_t examples = 0;
  std::size_t hits = 0;
};

struct IntrinsicReport {
  std::vector<DetectionReport> detection;
  std::vector<SuggestionReport> suggestion;
  /// Random suggestion baseline hits by candidate-set size, test split.
  std::map<std::size_t, SizeBucket> random_by_size;
};

struct ExtrinsicReport {
  std::vector<NavReport> conditions;
  std::map<std::string, std::vector<Episode>> episodes;
};

struct ExperimentReport {
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  IntrinsicReport intrinsic;
  ExtrinsicReport extrinsic;
};

IntrinsicReport evaluate_intrinsic(const SuiteData& data, const TrainedModels& models,
                                   const SuiteConfig& config);

/// Everything a navigator sees for one episode under one condition.
struct EpisodeView {
  std::vector<Highlight> highlights;
  std::vector<SuggestionList> suggestions;
};

EpisodeView episode_view(const SuiteData& data, const TrainedModels& models,
                         const SuiteConfig& config, const EpisodeTask& task, Condition condition);

ExtrinsicReport evaluate_extrinsic(const SuiteData& data, const TrainedModels& models,
                                   const SuiteConfig& config);

ExperimentReport run_experiment(const SuiteConfig& config);

/// Plain-text tables in the layout of the detection/suggestion and
/// navigation result tables.
std::string render_report(const ExperimentReport& report);

struct CorruptionStats {
  std::size_t instructions = 0;
  std::size_t with_hallucination = 0;
  std::size_t phrases = 0;
  std::size_t hallucinated_phrases = 0;

  double instruction_rate() const;
  double phrase_rate() const;
};

CorruptionStats corruption_stats(const std::vector<AnnotatedInstruction>& instructions);

/// Corrupts the clean instructions of `corpus` at `rates`, one derived seed per
/// record, with donor sentences drawn from the whole corpus.
std::vector<AnnotatedInstruction> corrupt_corpus(const Corpus& corpus, const CorruptionRates& rates,
                                                 std::uint64_t seed);

}  // namespace hear
