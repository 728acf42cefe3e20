#include "hear/experiment.hpp"

#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

#include "hear/rng.hpp"

namespace hear {

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::none:
      return "none";
    case Condition::model_highlights:
      return "model_highlights";
    case Condition::model_full:
      return "model_full";
    case Condition::oracle_highlights:
      return "oracle_highlights";
    case Condition::oracle_full:
      return "oracle_full";
  }
  return "none";
}

Condition condition_from_string(std::string_view text) {
  for (auto c : kAllConditions) {
    if (to_string(c) == text) return c;
  }
  throw std::invalid_argument("unknown condition: " + std::string(text));
}

bool shows_highlights(Condition c) { return c != Condition::none; }
bool shows_suggestions(Condition c) {
  return c == Condition::model_full || c == Condition::oracle_full;
}
bool is_oracle(Condition c) {
  return c == Condition::oracle_highlights || c == Condition::oracle_full;
}

FollowerMode follower_mode_for(Condition c) {
  if (!shows_highlights(c)) return FollowerMode::literal;
  return shows_suggestions(c) ? FollowerMode::suggestion_aware : FollowerMode::highlight_aware;
}

std::uint64_t SuiteConfig::hash() const {
  std::ostringstream os;
  os << seed << ';' << environments << ';' << env.min_nodes << ';' << env.max_nodes << ';'
     << env.spacing_m << ';' << env.jitter_m << ';' << env.extra_edge_prob << ';'
     << env.max_objects << ';' << env.levels << ';' << min_steps << ';' << max_steps << ';'
     << train_routes_per_env << ';' << eval_routes_per_env << ';' << episode_routes_per_env << ';'
     << train_pairs << ';' << dev_examples << ';' << test_examples << ';' << episodes << ';'
     << pairs.pairs_per_instruction << ';' << pairs.max_hallucinations << ';'
     << episode_rates.room << ';' << episode_rates.object << ';' << episode_rates.direction << ';'
     << episode_rates.extrinsic << ';' << episode_rates.instruction << ';' << train.hash() << ';' << features.aligned_radius << ';'
     << features.proportional_radius << ';' << check_budget << ';' << top_k << ';'
     << highlight_cap;
  return fnv1a64(os.str());
}

namespace {

std::string env_name(int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "env-%02d", k);
  return buf;
}

std::string route_name(const std::string& env_id, const std::string& tag, int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d", k);
  return env_id + "/" + tag + "-" + buf;
}

/// Samples `count` routes on `env` whose paths are not in `used`.
std::vector<CorpusRecord> add_routes(const Environment& env, int count, std::uint64_t seed,
                                     const std::string& tag, int min_steps, int max_steps,
                                     std::set<std::vector<NodeId>>& used) {
  std::vector<CorpusRecord> out;
  int attempt = 0;
  while (static_cast<int>(out.size()) < count && attempt < count * 50) {
    const auto route_seed = derive_seed(seed, tag + "/" + env.id() + "/" + std::to_string(attempt++));
    Route route = sample_route(env, route_seed, min_steps, max_steps);
    if (!used.insert(route.path()).second) continue;
    CorpusRecord rec;
    rec.route_id = route_name(env.id(), tag, static_cast<int>(out.size()));
    rec.instruction = describe_route(env, route, derive_seed(seed, "speaker/" + rec.route_id));
    rec.route = std::move(route);
    out.push_back(std::move(rec));
  }
  return out;
}

Corpus subset(const Corpus& full, const std::vector<CorpusRecord>& records) {
  Corpus c;
  c.environments = full.environments;
  c.records = records;
  c.index();
  return c;
}

template <typename T>
void truncate(std::vector<T>& v, std::size_t n) {
  if (v.size() > n) v.resize(n);
}

std::vector<PairedExample> plain_pairs(const std::vector<SourcedPair>& sourced) {
  std::vector<PairedExample> out;
  for (const auto& s : sourced) out.push_back(s.pair);
  return out;
}

}  // namespace

std::vector<Environment> generate_environments(std::uint64_t seed, int count, const EnvConfig& config) {
  std::vector<Environment> envs;
  for (int k = 0; k < count; ++k) {
    envs.push_back(generate_environment(derive_seed(seed, "env/" + env_name(k)), config, env_name(k)));
  }
  return envs;
}

Corpus generate_corpus(std::uint64_t seed, int environments, int routes_per_env,
                       const EnvConfig& env_config, int min_steps, int max_steps,
                       const std::string& tag) {
  Corpus corpus;
  corpus.environments = generate_environments(seed, environments, env_config);
  for (const auto& env : corpus.environments) {
    std::set<std::vector<NodeId>> used;
    auto recs = add_routes(env, routes_per_env, seed, tag, min_steps, max_steps, used);
    corpus.records.insert(corpus.records.end(), recs.begin(), recs.end());
  }
  corpus.index();
  return corpus;
}

SuiteData generate_suite(const SuiteConfig& config) {
  return generate_suite(config, generate_environments(config.seed, config.environments, config.env));
}

SuiteData generate_suite(const SuiteConfig& config, std::vector<Environment> environments) {
  SuiteData data;
  data.corpus.environments = std::move(environments);
  std::vector<CorpusRecord> train, dev, test, episodes;
  for (const auto& env : data.corpus.environments) {
    std::set<std::vector<NodeId>> used;
    auto add = [&](std::vector<CorpusRecord>& into, int count, const std::string& tag) {
      auto recs = add_routes(env, count, config.seed, tag, config.min_steps, config.max_steps, used);
      into.insert(into.end(), recs.begin(), recs.end());
    };
    add(episodes, config.episode_routes_per_env, "nav");
    add(test, config.eval_routes_per_env, "test");
    add(dev, config.eval_routes_per_env, "dev");
    add(train, config.train_routes_per_env, "train");
  }
  for (auto* split : {&train, &dev, &test, &episodes}) {
    auto& ids = split == &train ? data.train_ids
                : split == &dev ? data.dev_ids
                : split == &test ? data.test_ids
                                 : data.episode_ids;
    for (const auto& r : *split) {
      ids.push_back(r.route_id);
      data.corpus.records.push_back(r);
    }
  }
  data.corpus.index();

  const Corpus train_corpus = subset(data.corpus, train);
  const Corpus dev_corpus = subset(data.corpus, dev);
  const Corpus test_corpus = subset(data.corpus, test);
  const std::uint64_t pair_seed = derive_seed(config.seed, "pairs/train");

  data.detection_pairs = build_detection_pairs(train_corpus, pair_seed, PairStrategy::default_swap, config.pairs);
  const std::size_t detection_built = data.detection_pairs.size();
  truncate(data.detection_pairs, config.train_pairs);
  data.same_env_pairs =
      build_detection_pairs(train_corpus, pair_seed, PairStrategy::same_env_swap, config.pairs);
  truncate(data.same_env_pairs, config.train_pairs);
  data.type_pairs = build_type_pairs(train_corpus, pair_seed, config.pairs);
  truncate(data.type_pairs, config.train_pairs);
  {
    auto all = build_one_stage_pairs(train_corpus, pair_seed, config.pairs);
    std::vector<PairedExample> removal(all.begin() + static_cast<std::ptrdiff_t>(detection_built), all.end());
    truncate(removal, config.train_pairs / 2);
    data.one_stage_pairs = data.detection_pairs;
    data.one_stage_pairs.insert(data.one_stage_pairs.end(), removal.begin(), removal.end());
  }

  PairOptions eval_options = config.pairs;
  eval_options.pairs_per_instruction = 1;
  data.dev = build_detection_sources(dev_corpus, derive_seed(config.seed, "pairs/dev"),
                                     PairStrategy::default_swap, eval_options);
  truncate(data.dev, config.dev_examples / 2);
  data.test = build_detection_sources(test_corpus, derive_seed(config.seed, "pairs/test"),
                                      PairStrategy::default_swap, eval_options);
  truncate(data.test, config.test_examples / 2);
  data.type_dev = build_type_pairs(dev_corpus, derive_seed(config.seed, "pairs/dev"), eval_options);
  truncate(data.type_dev, config.dev_examples / 2);
  {
    const auto dev_pairs = plain_pairs(data.dev);
    auto all = build_one_stage_pairs(dev_corpus, derive_seed(config.seed, "pairs/dev"), eval_options);
    const auto built = build_detection_pairs(dev_corpus, derive_seed(config.seed, "pairs/dev"),
                                             PairStrategy::default_swap, eval_options).size();
    std::vector<PairedExample> removal(all.begin() + static_cast<std::ptrdiff_t>(built), all.end());
    truncate(removal, config.dev_examples / 4);
    data.one_stage_dev = dev_pairs;
    data.one_stage_dev.insert(data.one_stage_dev.end(), removal.begin(), removal.end());
  }

  const auto donors = donor_sentences(train_corpus);
  for (const auto& rec : episodes) {
    if (data.episodes.size() >= config.episodes) break;
    EpisodeTask task;
    task.id = "ep-" + rec.route_id;
    task.route_id = rec.route_id;
    task.instruction = corrupt_instruction(rec.instruction, config.episode_rates,
                                           derive_seed(config.seed, "episode/" + rec.route_id), donors);
    data.episodes.push_back(std::move(task));
  }
  return data;
}

GroundingModel train_and_calibrate(const Corpus& corpus, const std::vector<PairedExample>& pairs,
                                   const std::vector<PairedExample>& dev, ModelTask task,
                                   const TrainConfig& train, const FeatureConfig& features) {
  auto model = train_contrastive(featurize_pairs(corpus, pairs, features), train, task);
  std::vector<double> scores;
  std::vector<bool> labels;
  for (const auto& fp : featurize_pairs(corpus, dev, features)) {
    scores.push_back(score(model, fp.positive));
    labels.push_back(true);
    scores.push_back(score(model, fp.negative));
    labels.push_back(false);
  }
  model.threshold = select_threshold(scores, labels);
  return model;
}

TrainedModels train_models(const SuiteData& data, const SuiteConfig& config) {
  const auto dev = plain_pairs(data.dev);
  TrainedModels m;
  m.detection = train_and_calibrate(data.corpus, data.detection_pairs, dev, ModelTask::detection,
                                    config.train, config.features);
  m.type = train_and_calibrate(data.corpus, data.type_pairs, data.type_dev, ModelTask::type,
                               config.train, config.features);
  m.same_env_detection = train_and_calibrate(data.corpus, data.same_env_pairs, dev,
                                             ModelTask::detection, config.train, config.features);
  m.one_stage = train_and_calibrate(data.corpus, data.one_stage_pairs, data.one_stage_dev,
                                    ModelTask::one_stage, config.train, config.features);
  return m;
}

namespace {

RemedyContext context_for(const SuiteData& data, const std::string& route_id,
                          const SuiteConfig& config) {
  const auto& rec = data.corpus.record(route_id);
  RemedyContext ctx;
  ctx.env = &data.corpus.env(rec.route.env_id);
  ctx.route = &rec.route;
  ctx.features = config.features;
  return ctx;
}

std::vector<std::string> names(const SuggestionList& list) {
  std::vector<std::string> out;
  for (const auto& s : list.items) out.push_back(s.candidate);
  return out;
}

}  // namespace

IntrinsicReport evaluate_intrinsic(const SuiteData& data, const TrainedModels& models,
                                   const SuiteConfig& config) {
  IntrinsicReport report;
  for (const auto* split_ptr : {&data.dev, &data.test}) {
    const auto& split = *split_ptr;
    const std::string split_name = split_ptr == &data.dev ? "dev" : "test";

    std::vector<bool> golds;
    std::vector<bool> final_pred, same_pred, one_pred;
    std::vector<std::vector<std::string>> sets, final_rank, same_rank, one_rank;
    std::vector<std::string> gold_corrections;
    for (const auto& sp : split) {
      for (const auto* ex : {&sp.pair.positive, &sp.pair.negative}) {
        const auto& rec = data.corpus.record(ex->route_id);
        const auto f = featurize(data.corpus.env(ex->env_id), rec.route, *ex, config.features);
        golds.push_back(ex->label);
        final_pred.push_back(predict(models.detection, f).label);
        same_pred.push_back(predict(models.same_env_detection, f).label);
        one_pred.push_back(predict(models.one_stage, f).label);
      }
      const auto ctx = context_for(data, sp.pair.positive.route_id, config);
      const auto& ann = sp.positive_instruction;
      const auto set = generate_candidates(*ctx.env, ann, ann.spans[sp.positive_span]);
      sets.push_back(set.candidates);
      gold_corrections.push_back(ann.gold[sp.positive_span].correction);
      final_rank.push_back(names(rank_candidates(models.detection, models.type, ctx, ann,
                                                 sp.positive_span, set.candidates, config.top_k)));
      same_rank.push_back(names(rank_candidates(models.same_env_detection, models.type, ctx, ann,
                                                sp.positive_span, set.candidates, config.top_k)));
      one_rank.push_back(names(
          rank_one_stage(models.one_stage, ctx, ann, sp.positive_span, set.candidates, config.top_k)));
    }
    const auto random_pred =
        random_detection_baseline(golds.size(), derive_seed(config.seed, "random/detection/" + split_name));
    report.detection.push_back(detection_report("random", split_name, random_pred, golds));
    report.detection.push_back(detection_report("same_env_swap", split_name, same_pred, golds));
    report.detection.push_back(detection_report("one_stage", split_name, one_pred, golds));
    report.detection.push_back(detection_report("final", split_name, final_pred, golds));

    const int k = static_cast<int>(config.top_k);
    const auto random_rank = random_suggestion_baseline(
        sets, derive_seed(config.seed, "random/suggestion/" + split_name), k);
    auto add = [&](const std::string& system, const std::vector<std::vector<std::string>>& ranked) {
      auto r = recall_at_k(ranked, sets, gold_corrections, k);
      r.system = system;
      r.split = split_name;
      report.suggestion.push_back(r);
    };
    add("random", random_rank);
    add("same_env_swap", same_rank);
    add("one_stage", one_rank);
    add("final", final_rank);

    if (split_name == "test") {
      for (std::size_t e = 0; e < sets.size(); ++e) {
        auto& bucket = report.random_by_size[sets[e].size()];
        ++bucket.examples;
        const auto& top = random_rank[e];
        if (std::find(top.begin(), top.end(), gold_corrections[e]) != top.end()) ++bucket.hits;
      }
    }
  }
  return report;
}

EpisodeView episode_view(const SuiteData& data, const TrainedModels& models,
                         const SuiteConfig& config, const EpisodeTask& task, Condition condition) {
  EpisodeView view;
  const auto ctx = context_for(data, task.route_id, config);
  const auto& ann = task.instruction;
  switch (condition) {
    case Condition::none:
      break;
    case Condition::model_highlights:
    case Condition::model_full:
      view.highlights = detect_highlights(models.detection, ctx, ann, config.highlight_cap);
      break;
    case Condition::oracle_highlights:
    case Condition::oracle_full:
      view.highlights = gold_highlights(ann, config.highlight_cap);
      break;
  }
  if (condition == Condition::model_full) {
    for (const auto& h : view.highlights) {
      view.suggestions.push_back(suggest(models.detection, models.type, ctx, ann, h, config.top_k));
    }
  } else if (condition == Condition::oracle_full) {
    for (const auto& h : view.highlights) view.suggestions.push_back(oracle_suggestions(ann, h));
  }
  return view;
}

ExtrinsicReport evaluate_extrinsic(const SuiteData& data, const TrainedModels& models,
                                   const SuiteConfig& config) {
  ExtrinsicReport report;
  std::map<std::string, const Environment*> envs;
  for (const auto& e : data.corpus.environments) envs[e.id()] = &e;
  for (auto condition : kAllConditions) {
    std::vector<Episode> episodes;
    for (const auto& task : data.episodes) {
      const auto& rec = data.corpus.record(task.route_id);
      const auto& env = data.corpus.env(rec.route.env_id);
      const auto view = episode_view(data, models, config, task, condition);
      FollowerPolicy policy;
      policy.mode = follower_mode_for(condition);
      policy.check_budget = config.check_budget;
      policy.seed = derive_seed(config.seed, "follower/" + task.id);
      auto ep = simulate_follower(env, rec.route.start_node(), rec.route.start_heading,
                                  task.instruction, view.highlights, view.suggestions,
                                  rec.route.final_node(), policy);
      ep.id = task.id;
      episodes.push_back(std::move(ep));
    }
    const std::string name(to_string(condition));
    report.conditions.push_back(nav_report(name, envs, episodes));
    report.episodes[name] = std::move(episodes);
  }
  return report;
}

ExperimentReport run_experiment(const SuiteConfig& config) {
  const auto data = generate_suite(config);
  const auto models = train_models(data, config);
  ExperimentReport report;
  report.seed = config.seed;
  report.config_hash = config.hash();
  report.intrinsic = evaluate_intrinsic(data, models, config);
  report.extrinsic = evaluate_extrinsic(data, models, config);
  return report;
}

std::string render_report(const ExperimentReport& report) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "seed %llu  config %016llx\n\n",
                static_cast<unsigned long long>(report.seed),
                static_cast<unsigned long long>(report.config_hash));
  os << line;
  os << "Intrinsic evaluation\n";
  std::snprintf(line, sizeof line, "%-16s %10s %10s %10s %10s\n", "system", "dev F1", "dev R@3",
                "test F1", "test R@3");
  os << line;
  for (const char* system : {"random", "same_env_swap", "one_stage", "final"}) {
    double f[2] = {0, 0};
    double r[2] = {0, 0};
    for (const auto& d : report.intrinsic.detection) {
      if (d.system == system) f[d.split == "test"] = d.macro_f1;
    }
    for (const auto& s : report.intrinsic.suggestion) {
      if (s.system == system) r[s.split == "test"] = s.recall_at_k;
    }
    std::snprintf(line, sizeof line, "%-16s %10.1f %10.1f %10.1f %10.1f\n", system, 100 * f[0],
                  100 * r[0], 100 * f[1], 100 * r[1]);
    os << line;
  }
  os << "\nRandom suggestion recall by candidate-set size (test)\n";
  for (const auto& [size, bucket] : report.intrinsic.random_by_size) {
    const double expected = size <= 3 ? 1.0 : 3.0 / static_cast<double>(size);
    std::snprintf(line, sizeof line, "  M=%-4zu n=%-5zu recall=%.3f expected=%.3f\n", size,
                  bucket.examples,
                  bucket.examples ? static_cast<double>(bucket.hits) / static_cast<double>(bucket.examples) : 0.0,
                  expected);
    os << line;
  }
  os << "\nExtrinsic evaluation\n";
  std::snprintf(line, sizeof line, "%-18s %8s %10s %10s %8s %6s\n", "condition", "SR", "DIST",
                "median", "checks", "n");
  os << line;
  for (const auto& n : report.extrinsic.conditions) {
    std::snprintf(line, sizeof line, "%-18s %8.1f %10.2f %10.2f %8.2f %6zu\n", n.condition.c_str(),
                  100 * n.success_rate, n.mean_error, n.median_error, n.mean_checks, n.episodes);
    os << line;
  }
  return os.str();
}

double CorruptionStats::instruction_rate() const {
  return instructions ? static_cast<double>(with_hallucination) / static_cast<double>(instructions) : 0.0;
}

double CorruptionStats::phrase_rate() const {
  return phrases ? static_cast<double>(hallucinated_phrases) / static_cast<double>(phrases) : 0.0;
}

CorruptionStats corruption_stats(const std::vector<AnnotatedInstruction>& instructions) {
  CorruptionStats s;
  for (const auto& ann : instructions) {
    ++s.instructions;
    const auto h = ann.hallucination_count();
    if (h > 0) ++s.with_hallucination;
    s.phrases += ann.spans.size();
    s.hallucinated_phrases += h;
  }
  return s;
}

std::vector<AnnotatedInstruction> corrupt_corpus(const Corpus& corpus, const CorruptionRates& rates,
                                                 std::uint64_t seed) {
  const auto donors = donor_sentences(corpus);
  std::vector<AnnotatedInstruction> out;
  for (std::size_t r = 0; r < corpus.records.size(); ++r) {
    out.push_back(corrupt_instruction(corpus.records[r].instruction, rates, derive_seed(seed, r), donors));
  }
  return out;
}

}  // namespace hear
