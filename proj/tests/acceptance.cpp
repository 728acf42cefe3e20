// Acceptance checks P1-P10. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "hear/experiment.hpp"
#include "hear/io.hpp"
#include "hear/rng.hpp"
#include "oracles.hpp"

using namespace hear;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const char* id, const char* title, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s %s: %s (%s)\n", id, o.pass ? "PASS" : "FAIL", title, o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

GroundingModel random_model(Rng& rng, ModelTask task) {
  GroundingModel m;
  m.task = task;
  for (auto& w : m.weights) w = rng.uniform(-3.0, 3.0);
  return m;
}

/// Oracle sigmoid and dot product (same evaluation order as any sane
/// implementation: left-to-right sum, branch on sign).
double o_sigmoid(double s) {
  if (s >= 0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

double o_dot(const std::vector<double>& w, const FeatureVector& f) {
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) s += w[k] * f[k];
  return s;
}

/// Marked example built by hand: [BH] before the span, [EH] after it.
DetectionExample o_wrap(const std::string& env_id, const AnnotatedInstruction& ann, const PhraseSpan& span,
                        const std::vector<std::string>& words) {
  DetectionExample ex;
  ex.env_id = env_id;
  ex.tokens.assign(ann.tokens.begin(), ann.tokens.begin() + static_cast<std::ptrdiff_t>(span.i));
  ex.tokens.emplace_back(kBeginHallucination);
  ex.i = ex.tokens.size();
  ex.tokens.insert(ex.tokens.end(), words.begin(), words.end());
  ex.j = ex.tokens.size() - 1;
  ex.tokens.emplace_back(kEndHallucination);
  ex.tokens.insert(ex.tokens.end(), ann.tokens.begin() + static_cast<std::ptrdiff_t>(span.j + 1), ann.tokens.end());
  ex.kind = span.kind;
  ex.alignment = ann.alignment;
  return ex;
}

struct Scored {
  std::string candidate;
  double score;
};

/// Exhaustive two-case scoring: P_I * (1 - P_H(x_hat)) for replacements and
/// 1 - P_I for deletion, then the total order (score desc, phrase before
/// REMOVE on ties, lexicographic).
std::vector<Scored> exhaustive_rank(const GroundingModel& det, const GroundingModel& type, const Environment& env,
                                    const Route& route, const AnnotatedInstruction& ann, std::size_t span_index,
                                    const std::vector<std::string>& candidates, const FeatureConfig& fc) {
  const auto& span = ann.spans[span_index];
  const auto original = o_wrap(route.env_id, ann, span,
                               std::vector<std::string>(ann.tokens.begin() + static_cast<std::ptrdiff_t>(span.i),
                                                        ann.tokens.begin() + static_cast<std::ptrdiff_t>(span.j + 1)));
  const double p_i = o_sigmoid(o_dot(type.weights, featurize(env, route, original, fc)));
  std::vector<Scored> out;
  for (const auto& c : candidates) {
    if (c == kRemove) {
      out.push_back({c, 1.0 - p_i});
      continue;
    }
    const auto ex = o_wrap(route.env_id, ann, span, split_words(c));
    const double p_h = o_sigmoid(o_dot(det.weights, featurize(env, route, ex, fc)));
    out.push_back({c, p_i * (1.0 - p_h)});
  }
  std::sort(out.begin(), out.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    const bool ra = a.candidate == kRemove, rb = b.candidate == kRemove;
    if (ra != rb) return rb;
    return a.candidate < b.candidate;
  });
  return out;
}

/// Shared standard suite for P4, P5 and P7.
struct SuiteRun {
  SuiteConfig config;
  SuiteData data;
  TrainedModels models;
  IntrinsicReport intrinsic;
  ExtrinsicReport extrinsic;
  double intrinsic_seconds = 0;
  double extrinsic_seconds = 0;
};

SuiteRun& standard_suite() {
  static SuiteRun run = [] {
    SuiteRun r;
    auto t0 = Clock::now();
    r.data = generate_suite(r.config);
    r.models = train_models(r.data, r.config);
    r.intrinsic = evaluate_intrinsic(r.data, r.models, r.config);
    r.intrinsic_seconds = seconds_since(t0);
    t0 = Clock::now();
    r.extrinsic = evaluate_extrinsic(r.data, r.models, r.config);
    r.extrinsic_seconds = seconds_since(t0);
    return r;
  }();
  return run;
}

const DetectionReport& find_detection(const IntrinsicReport& r, const std::string& system, const std::string& split) {
  for (const auto& d : r.detection)
    if (d.system == system && d.split == split) return d;
  throw std::runtime_error("missing detection report " + system);
}

const SuggestionReport& find_suggestion(const IntrinsicReport& r, const std::string& system, const std::string& split) {
  for (const auto& s : r.suggestion)
    if (s.system == system && s.split == split) return s;
  throw std::runtime_error("missing suggestion report " + system);
}

const NavReport& find_nav(const ExtrinsicReport& r, Condition c) {
  for (const auto& n : r.conditions)
    if (n.condition == to_string(c)) return n;
  throw std::runtime_error("missing navigation report");
}

/// Small pool of corrupted instructions with their contexts for P1/P2.
struct Instance {
  const Environment* env;
  const Route* route;
  AnnotatedInstruction ann;
};

std::vector<Instance> instance_pool(const Corpus& corpus, std::uint64_t seed) {
  static std::vector<AnnotatedInstruction> corrupted;
  corrupted = corrupt_corpus(corpus, CorruptionRates::paper_calibrated(), seed);
  std::vector<Instance> pool;
  for (std::size_t k = 0; k < corpus.records.size(); ++k) {
    const auto& rec = corpus.records[k];
    pool.push_back({&corpus.env(rec.route.env_id), &rec.route, corrupted[k]});
  }
  return pool;
}

std::string run_command(const std::string& cmd) {
  const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
  if (rc != 0) throw std::runtime_error("command failed (" + std::to_string(rc) + "): " + cmd);
  return {};
}

}  // namespace

int main() {
  const auto total0 = Clock::now();
  const EnvConfig env_config;
  static const Corpus small = generate_corpus(7, 6, 20, env_config, 3, 6, "acc");
  static const auto pool = instance_pool(small, 11);

  report("P1", "two-stage ranking equals exhaustive scoring oracle", [&] {
    const auto t0 = Clock::now();
    Rng rng(101);
    double max_dev = 0.0;
    int order_mismatches = 0;
    const FeatureConfig fc;
    for (int n = 0; n < 200; ++n) {
      const auto& inst = pool[rng.index(pool.size())];
      const auto det = random_model(rng, ModelTask::detection);
      const auto type = random_model(rng, ModelTask::type);
      const std::size_t span_index = rng.index(inst.ann.spans.size());
      auto cands = generate_candidates(*inst.env, inst.ann, inst.ann.spans[span_index]).candidates;
      rng.shuffle(cands);
      cands.resize(1 + rng.index(std::min<std::size_t>(cands.size(), 20)));
      RemedyContext ctx;
      ctx.env = inst.env;
      ctx.route = inst.route;
      const auto got = rank_candidates(det, type, ctx, inst.ann, span_index, cands, cands.size());
      const auto want = exhaustive_rank(det, type, *inst.env, *inst.route, inst.ann, span_index, cands, fc);
      if (got.items.size() != want.size()) {
        ++order_mismatches;
        continue;
      }
      for (std::size_t k = 0; k < want.size(); ++k) {
        if (got.items[k].candidate != want[k].candidate) ++order_mismatches;
        max_dev = std::max(max_dev, std::abs(got.items[k].score - want[k].score));
      }
      const auto top3 = rank_candidates(det, type, ctx, inst.ann, span_index, cands, 3);
      for (std::size_t k = 0; k < top3.items.size(); ++k) {
        if (top3.items[k].candidate != want[k].candidate) ++order_mismatches;
      }
    }
    const double secs = seconds_since(t0);
    return Outcome{max_dev == 0.0 && order_mismatches == 0 && secs < 10.0,
                   fmt("200 instances, max |dev| %.3g, order mismatches %d, %.2f s", max_dev, order_mismatches, secs)};
  });

  report("P2", "P_H = P_I = 0.5 gives 0.25 per replacement and 0.5 for REMOVE first", [&] {
    const GroundingModel half_det;   // zero weights: sigma(0) = 0.5
    GroundingModel half_type;
    half_type.task = ModelTask::type;
    int bad = 0, checked = 0;
    for (std::size_t n = 0; n < 100; ++n) {
      const auto& inst = pool[n % pool.size()];
      const std::size_t span_index = n % inst.ann.spans.size();
      const auto cands = generate_candidates(*inst.env, inst.ann, inst.ann.spans[span_index]).candidates;
      RemedyContext ctx;
      ctx.env = inst.env;
      ctx.route = inst.route;
      const auto list = rank_candidates(half_det, half_type, ctx, inst.ann, span_index, cands, cands.size());
      ++checked;
      if (list.items.empty() || list.items.front().candidate != kRemove || list.items.front().score != 0.5) ++bad;
      for (std::size_t k = 1; k < list.items.size(); ++k) {
        if (list.items[k].candidate == kRemove || list.items[k].score != 0.25) ++bad;
      }
    }
    return Outcome{bad == 0, fmt("%d candidate lists, %d violations", checked, bad)};
  });

  report("P3", "contrastive gradient matches finite differences; toy set converges", [&] {
    const auto t0 = Clock::now();
    Rng rng(303);
    double worst = 0.0;
    for (int cfg = 0; cfg < 50; ++cfg) {
      std::vector<FeaturizedPair> pairs(1 + rng.index(20));
      for (auto& p : pairs) {
        for (std::size_t k = 0; k < kFeatureDim; ++k) {
          p.positive[k] = rng.uniform(-1.0, 1.0);
          p.negative[k] = rng.uniform(-1.0, 1.0);
        }
      }
      std::vector<double> w(kFeatureDim);
      for (auto& x : w) x = rng.uniform(-2.0, 2.0);
      const double mix = rng.uniform();
      const auto lg = contrastive_loss(w, pairs, mix);
      const double h = 1e-5;
      double num = 0.0, den = 0.0;
      for (std::size_t k = 0; k < kFeatureDim; ++k) {
        auto wp = w, wm = w;
        wp[k] += h;
        wm[k] -= h;
        const double fd = (oracle::contrastive_objective(wp, pairs, mix) - oracle::contrastive_objective(wm, pairs, mix)) / (2 * h);
        num += (lg.gradient[k] - fd) * (lg.gradient[k] - fd);
        den += std::max(lg.gradient[k] * lg.gradient[k], fd * fd);
      }
      worst = std::max(worst, std::sqrt(num) / std::max(std::sqrt(den), 1e-12));
    }
    // Toy separable set: the first feature separates positives from negatives.
    std::vector<FeaturizedPair> toy(40);
    for (auto& p : toy) {
      for (std::size_t k = 0; k < kFeatureDim; ++k) {
        p.positive[k] = rng.uniform(-0.2, 0.2);
        p.negative[k] = rng.uniform(-0.2, 0.2);
      }
      p.positive[0] = rng.uniform(0.5, 1.0);
      p.negative[0] = rng.uniform(-1.0, -0.5);
      p.positive[kFeatureDim - 1] = p.negative[kFeatureDim - 1] = 1.0;
    }
    TrainConfig tc;
    tc.epochs = 200;
    std::vector<double> trace;
    const auto model = train_contrastive(toy, tc, ModelTask::detection, &trace);
    bool monotone = true;
    for (std::size_t k = 1; k < trace.size(); ++k) monotone = monotone && trace[k] <= trace[k - 1];
    const double pair_loss = contrastive_loss(model.weights, toy, tc.pointwise_mix).pair_loss;
    const double secs = seconds_since(t0);
    return Outcome{worst <= 1e-6 && monotone && pair_loss < 0.1 && secs < 30.0,
                   fmt("50 configs, worst relative error %.2e; toy loss %s, final pair loss %.4f after %d epochs; %.2f s",
                       worst, monotone ? "non-increasing" : "INCREASED", pair_loss, tc.epochs, secs)};
  });

  report("P4", "trained detector macro-F1 >= 0.80 and >= Random + 0.25", [&] {
    auto& run = standard_suite();
    const auto& fin = find_detection(run.intrinsic, "final", "test");
    const auto& rnd = find_detection(run.intrinsic, "random", "test");
    const std::size_t n = fin.counts.tp + fin.counts.fp + fin.counts.tn + fin.counts.fn;
    const std::size_t pos = fin.counts.tp + fin.counts.fn;
    const bool ok = fin.macro_f1 >= 0.80 && fin.macro_f1 - rnd.macro_f1 >= 0.25 &&
                    std::abs(rnd.macro_f1 - 0.5) <= 0.03 && run.data.detection_pairs.size() == 2000 &&
                    n == 500 && 2 * pos == n && run.intrinsic_seconds < 120.0;
    const char* band = std::abs(rnd.macro_f1 - 0.5) <= 0.03 ? "inside" : "OUTSIDE";
    return Outcome{ok, fmt("test F1 %.3f, Random %.3f (%s 0.5 +/- 0.03, gap %.3f), %zu training pairs, %zu test examples (%zu positive), %.1f s",
                           fin.macro_f1, rnd.macro_f1, band, fin.macro_f1 - rnd.macro_f1, run.data.detection_pairs.size(),
                           n, pos, run.intrinsic_seconds)};
  });

  report("P5", "two-stage Recall@3 >= 0.75; Random within 99% CI of 3/M; one-stage reported", [&] {
    auto& run = standard_suite();
    const auto& fin = find_suggestion(run.intrinsic, "final", "test");
    const auto& one = find_suggestion(run.intrinsic, "one_stage", "test");
    int outside = 0;
    std::string buckets;
    for (const auto& [m, b] : run.intrinsic.random_by_size) {
      const double expected = m <= 3 ? 1.0 : 3.0 / static_cast<double>(m);
      const auto [lo, hi] = oracle::clopper_pearson(b.examples, b.hits, 0.99);
      if (expected < lo - 1e-12 || expected > hi + 1e-12) {
        ++outside;
        buckets += fmt(" M=%zu:%zu/%zu", m, b.hits, b.examples);
      }
    }
    const bool ok = fin.recall_at_k >= 0.75 && fin.excluded == 0 && outside == 0 && one.evaluated == fin.evaluated;
    return Outcome{ok, fmt("final R@3 %.3f over %zu (excluded %zu); one-stage R@3 %.3f; %zu size buckets, %d outside CI%s",
                           fin.recall_at_k, fin.evaluated, fin.excluded, one.recall_at_k,
                           run.intrinsic.random_by_size.size(), outside, buckets.c_str())};
  });

  report("P6", "select_threshold equals brute-force macro-F1 maximization", [&] {
    Rng rng(606);
    int mismatches = 0;
    for (int n = 0; n < 100; ++n) {
      const std::size_t size = 2 + rng.index(60);
      std::vector<double> scores(size);
      std::vector<bool> labels(size);
      const bool coarse = rng.bernoulli(0.5);
      for (std::size_t k = 0; k < size; ++k) {
        labels[k] = rng.bernoulli(0.5);
        double s = rng.uniform(-3.0, 3.0) + (labels[k] ? rng.uniform(0.0, 2.0) : 0.0);
        if (coarse) s = std::round(s * 2.0) / 2.0;  // ties
        scores[k] = s;
      }
      labels[0] = true;
      labels[1] = false;
      const double tau = select_threshold(scores, labels);
      std::vector<bool> pred;
      for (double s : scores) pred.push_back(s > tau);
      if (oracle::macro_f1(pred, labels) != oracle::best_macro_f1(scores, labels)) ++mismatches;
    }
    return Outcome{mismatches == 0, fmt("100 random dev sets, %d mismatches", mismatches)};
  });

  report("P7", "extrinsic orderings under the simulated follower", [&] {
    auto& run = standard_suite();
    const auto& none = find_nav(run.extrinsic, Condition::none);
    const auto& oh = find_nav(run.extrinsic, Condition::oracle_highlights);
    const auto& of = find_nav(run.extrinsic, Condition::oracle_full);
    bool checks_ok = true;
    for (auto c : kAllConditions) {
      if (c != Condition::none) checks_ok = checks_ok && find_nav(run.extrinsic, c).mean_checks >= none.mean_checks;
    }
    const bool ok = none.episodes == 100 && oh.success_rate >= none.success_rate + 0.05 &&
                    of.success_rate >= oh.success_rate && of.mean_error <= none.mean_error && checks_ok &&
                    run.extrinsic_seconds < 60.0;
    std::string checks;
    for (const auto& n : run.extrinsic.conditions) checks += fmt(" %s=%.2f", n.condition.c_str(), n.mean_checks);
    return Outcome{ok, fmt("SR none %.2f, oracle highlights %.2f, oracle full %.2f; DIST none %.2f, oracle full %.2f; checks%s; %zu episodes, %.1f s",
                           none.success_rate, oh.success_rate, of.success_rate, none.mean_error, of.mean_error,
                           checks.c_str(), none.episodes, run.extrinsic_seconds)};
  });

  report("P8", "calibrated corruption rates over 1,000 instructions", [&] {
    Corpus corpus = generate_corpus(808, 25, 45, env_config, 3, 6, "cal");
    corpus.records.resize(std::min<std::size_t>(corpus.records.size(), 1000));
    corpus.index();
    const auto stats = corruption_stats(corrupt_corpus(corpus, CorruptionRates::paper_calibrated(), 809));
    const bool ok = stats.instructions == 1000 && std::abs(stats.instruction_rate() - 0.675) <= 0.05 &&
                    std::abs(stats.phrase_rate() - 0.209) <= 0.03;
    return Outcome{ok, fmt("%zu instructions, instruction-level %.3f (target 0.675), phrase-level %.3f (target 0.209)",
                           stats.instructions, stats.instruction_rate(), stats.phrase_rate())};
  });

  report("P9", "gold corrections restore grounding; files round-trip byte-identically", [&] {
    Corpus corpus = generate_corpus(909, 10, 40, env_config, 3, 6, "rt");
    const auto corrupted = corrupt_corpus(corpus, CorruptionRates::paper_calibrated(), 910);
    int samples = 0, grounded = 0, clean_ok = 0;
    std::string first_failure;
    for (std::size_t k = 0; k < corpus.records.size() && samples < 200; ++k) {
      const auto& rec = corpus.records[k];
      const auto& env = corpus.env(rec.route.env_id);
      if (corrupted[k].hallucination_count() == 0) continue;
      ++samples;
      const auto fixed = apply_gold_corrections(corrupted[k]);
      const auto v = oracle::check_grounding(env, rec.route, fixed.tokens);
      if (v.ok) {
        ++grounded;
      } else if (first_failure.empty()) {
        first_failure = " first failure: " + rec.route_id + " " + v.reason;
      }
    }
    for (const auto& rec : corpus.records) {
      if (oracle::check_grounding(corpus.env(rec.route.env_id), rec.route, rec.instruction.tokens).ok) ++clean_ok;
    }
    int identical = 0, files = 0;
    auto trip = [&](const std::string& a, const std::string& b) {
      ++files;
      if (a == b) ++identical;
    };
    const auto env_text = write_environments(corpus.environments);
    trip(env_text, write_environments(read_environments(env_text)));
    std::vector<NamedRoute> routes;
    for (const auto& r : corpus.records) routes.push_back({r.route_id, r.route});
    const auto route_text = write_routes(routes);
    trip(route_text, write_routes(read_routes(route_text)));
    std::vector<CorpusRecord> corrupted_records = corpus.records;
    for (std::size_t k = 0; k < corrupted_records.size(); ++k) corrupted_records[k].instruction = corrupted[k];
    const auto corpus_text = write_corpus(corrupted_records);
    trip(corpus_text, write_corpus(read_corpus(corpus_text)));
    Rng rng(911);
    for (auto task : {ModelTask::detection, ModelTask::type, ModelTask::one_stage}) {
      GroundingModel m = random_model(rng, task);
      m.threshold = rng.uniform(-1.0, 1.0);
      m.seed = rng.next();
      m.config_hash = rng.next();
      const auto text = write_model(m);
      trip(text, write_model(read_model(text)));
    }
    GroundingModel inf_model;
    inf_model.threshold = -std::numeric_limits<double>::infinity();
    trip(write_model(inf_model), write_model(read_model(write_model(inf_model))));
    const bool ok = samples == 200 && grounded == samples && clean_ok == static_cast<int>(corpus.records.size()) &&
                    identical == files;
    return Outcome{ok, fmt("%d/%d corrected samples grounded, %d/%zu clean instructions grounded, %d/%d files byte-identical%s",
                           grounded, samples, clean_ok, corpus.records.size(), identical, files, first_failure.c_str())};
  });

  report("P10", "gen-env -> gen-data -> train -> eval is byte-identical across runs", [&] {
    const fs::path root = fs::temp_directory_path() / ("hear-p10-" + std::to_string(::getpid()));
    fs::remove_all(root);
    std::vector<std::string> reports;
    for (int run = 0; run < 2; ++run) {
      const fs::path dir = root / ("run" + std::to_string(run));
      fs::create_directories(dir);
#ifdef HEAR_CLI
      const std::string cli = HEAR_CLI;
      run_command(cli + " --seed 42 --out " + (dir / "envs.jsonl").string() + " gen-env --count 20");
      run_command(cli + " --seed 42 --out " + (dir / "data").string() + " gen-data --envs " + (dir / "envs.jsonl").string());
      run_command(cli + " --out " + (dir / "models").string() + " train --data " + (dir / "data").string());
      run_command(cli + " --out " + (dir / "report.json").string() + " eval --data " + (dir / "data").string() +
                  " --models " + (dir / "models").string());
#else
      SuiteConfig c;
      write_file(dir / "envs.jsonl", write_environments(generate_environments(c.seed, c.environments, c.env)));
      save_suite(dir / "data", generate_suite(c, read_environments(read_file(dir / "envs.jsonl"))));
      const auto data = load_suite(dir / "data");
      save_models(dir / "models", train_models(data, c));
      const auto models = load_models(dir / "models");
      ExperimentReport r;
      r.seed = c.seed;
      r.config_hash = c.hash();
      r.intrinsic = evaluate_intrinsic(data, models, c);
      r.extrinsic = evaluate_extrinsic(data, models, c);
      write_file(dir / "report.json", write_report(r));
#endif
      reports.push_back(read_file(dir / "report.json"));
    }
    const bool same = reports[0] == reports[1] && !reports[0].empty();
    // The file pipeline must also agree with the in-memory experiment.
    const bool matches_memory = same && reports[0] == write_report(run_experiment(SuiteConfig{}));
    fs::remove_all(root);
    return Outcome{same && matches_memory, fmt("report %zu bytes, runs %s, in-memory run %s", reports[0].size(),
                                               same ? "identical" : "DIFFER", matches_memory ? "identical" : "DIFFERS")};
  });

  std::printf("acceptance: %d failed, %.1f s total\n", failures, seconds_since(total0));
  return failures == 0 ? 0 : 1;
}
